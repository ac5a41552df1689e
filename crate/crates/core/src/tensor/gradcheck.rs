use alloc::vec::Vec;

use rand::Rng;

use super::{Real, Tape, Tensor, TensorError, Var};
use crate::rng;

/// A scalar function that can be traced at any precision.
pub trait Traced {
    fn trace<F: Real>(&self, tape: &mut Tape<F>, inputs: &[Var]) -> Result<Var, TensorError>;
}

/// Finite-difference comparison settings.
#[derive(Debug, Clone, Copy)]
pub struct GradCheck {
    /// Central-difference step.
    pub eps: f64,
    /// Maximum allowed relative error.
    pub tol: f64,
    /// Lower bound on the relative-error denominator, so that coordinates
    /// whose true gradient is ~0 are compared on an absolute scale.
    pub floor: f64,
    /// Check this many randomly chosen coordinates instead of all of them.
    pub sample: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheck {
    fn default() -> Self {
        Self { eps: 1e-3, tol: 1e-3, floor: 1e-6, sample: None, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    /// `(input, coordinate, analytic, numeric)` at the largest relative error.
    pub worst: Option<(usize, usize, f64, f64)>,
    pub passed: bool,
}

/// Compares reverse-mode gradients computed at precision `F` against
/// Richardson-extrapolated central differences of the same function traced
/// in `f64`, so the tolerance measures the gradient under test rather than
/// rounding or truncation in the reference.
pub fn grad_check<F: Real, T: Traced>(
    f: &T,
    inputs: &[Tensor<F>],
    cfg: &GradCheck,
) -> Result<GradCheckReport, TensorError> {
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t.clone())).collect();
    let out = f.trace(&mut tape, &vars)?;
    let grads = tape.backward(out)?;
    let analytic = |t: usize, i: usize| grads.get(vars[t]).map_or(0.0, |g| g[i].to_f64());

    let reference: Vec<Tensor<f64>> =
        inputs.iter().map(|t| Tensor::from_fn(t.shape().to_vec(), |i| t.data()[i].to_f64())).collect();
    let evaluate = |values: &[Tensor<f64>]| -> Result<f64, TensorError> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().map(|t| tape.constant(t.clone())).collect();
        let out = f.trace(&mut tape, &vars)?;
        Ok(tape.value(out).data()[0])
    };
    compare(reference, analytic, evaluate, cfg, true)
}

/// Same-precision variant for closures: both the gradient and the
/// difference quotient are computed at `F`.
pub fn grad_check_fn<F, Func>(f: Func, inputs: &[Tensor<F>], cfg: &GradCheck) -> Result<GradCheckReport, TensorError>
where
    F: Real,
    Func: Fn(&mut Tape<F>, &[Var]) -> Result<Var, TensorError>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let grads = tape.backward(out)?;
    let analytic = |t: usize, i: usize| grads.get(vars[t]).map_or(0.0, |g| g[i].to_f64());
    let evaluate = |values: &[Tensor<F>]| -> Result<f64, TensorError> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().map(|t| tape.constant(t.clone())).collect();
        let out = f(&mut tape, &vars)?;
        Ok(tape.value(out).data()[0].to_f64())
    };
    compare(inputs.to_vec(), analytic, evaluate, cfg, false)
}

fn compare<R: Real>(
    mut values: Vec<Tensor<R>>,
    analytic: impl Fn(usize, usize) -> f64,
    evaluate: impl Fn(&[Tensor<R>]) -> Result<f64, TensorError>,
    cfg: &GradCheck,
    extrapolate: bool,
) -> Result<GradCheckReport, TensorError> {
    let coords: Vec<(usize, usize)> = match cfg.sample {
        None => values.iter().enumerate().flat_map(|(t, x)| (0..x.numel()).map(move |i| (t, i))).collect(),
        Some(count) => {
            let total: usize = values.iter().map(Tensor::numel).sum();
            let mut rng = rng::stream(cfg.seed, 0);
            (0..count.min(total))
                .map(|_| {
                    let mut flat = rng.random_range(0..total);
                    let mut t = 0;
                    while flat >= values[t].numel() {
                        flat -= values[t].numel();
                        t += 1;
                    }
                    (t, flat)
                })
                .collect()
        }
    };

    let mut report = GradCheckReport { checked: 0, max_rel_error: 0.0, max_abs_error: 0.0, worst: None, passed: true };
    for (t, i) in coords {
        let mut difference = |eps: f64| -> Result<f64, TensorError> {
            let original = values[t].data()[i];
            // Divide by the step actually taken after rounding.
            let up = R::from_f64(original.to_f64() + eps);
            let down = R::from_f64(original.to_f64() - eps);
            values[t].data_mut()[i] = up;
            let plus = evaluate(&values)?;
            values[t].data_mut()[i] = down;
            let minus = evaluate(&values)?;
            values[t].data_mut()[i] = original;
            Ok((plus - minus) / (up.to_f64() - down.to_f64()))
        };
        let numeric = if extrapolate {
            // Richardson: cancels the O(eps^2) truncation term.
            let coarse = difference(cfg.eps)?;
            let fine = difference(cfg.eps / 2.0)?;
            (4.0 * fine - coarse) / 3.0
        } else {
            difference(cfg.eps)?
        };

        let a = analytic(t, i);
        let abs = libm::fabs(a - numeric);
        let rel = abs / libm::fabs(a).max(libm::fabs(numeric)).max(cfg.floor);
        report.checked += 1;
        report.max_abs_error = report.max_abs_error.max(abs);
        if rel > report.max_rel_error || report.worst.is_none() {
            report.max_rel_error = rel;
            report.worst = Some((t, i, a, numeric));
        }
    }
    report.passed = report.max_rel_error < cfg.tol;
    Ok(report)
}

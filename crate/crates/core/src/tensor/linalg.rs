use super::Real;

/// Row and column strides of a matrix view.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub rs: usize,
    pub cs: usize,
}

impl Layout {
    /// Row-major `rows × cols`, optionally viewed transposed.
    pub fn row_major(cols_stored: usize, transposed: bool) -> Self {
        if transposed {
            Self { rs: 1, cs: cols_stored }
        } else {
            Self { rs: cols_stored, cs: 1 }
        }
    }

    pub fn t(self) -> Self {
        Self { rs: self.cs, cs: self.rs }
    }

    fn extent(self, rows: usize, cols: usize) -> usize {
        if rows == 0 || cols == 0 {
            0
        } else {
            (rows - 1) * self.rs + (cols - 1) * self.cs + 1
        }
    }
}

/// `C ← alpha·A·B + beta·C` with `A: m×k`, `B: k×n`, `C: m×n` addressed
/// through strided views. With `beta = 0`, `C` is not read.
#[allow(clippy::too_many_arguments)]
pub fn gemm<F: Real>(
    m: usize,
    k: usize,
    n: usize,
    alpha: F,
    a: &[F],
    la: Layout,
    b: &[F],
    lb: Layout,
    beta: F,
    c: &mut [F],
    lc: Layout,
) {
    assert!(la.extent(m, k) <= a.len(), "gemm: A view out of bounds");
    assert!(lb.extent(k, n) <= b.len(), "gemm: B view out of bounds");
    assert!(lc.extent(m, n) <= c.len(), "gemm: C view out of bounds");
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: the extents checked above keep every addressed element inside
    // the slices, and `c` is exclusively borrowed.
    unsafe {
        F::gemm_raw(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            la.rs as isize,
            la.cs as isize,
            b.as_ptr(),
            lb.rs as isize,
            lb.cs as isize,
            beta,
            c.as_mut_ptr(),
            lc.rs as isize,
            lc.cs as isize,
        )
    }
}

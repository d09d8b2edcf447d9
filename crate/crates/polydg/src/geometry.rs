//! Small vector/tensor helpers shared by assembly and norm evaluation.
//!
//! Matrices are row-major `[[f64; D]; D]`. These kernels are dimension-generic
//! so the same code paths back both the 2D solver and the d = 3 unit tests.

pub fn dot<const D: usize>(a: [f64; D], b: [f64; D]) -> f64 {
    let mut s = 0.0;
    for i in 0..D {
        s += a[i] * b[i];
    }
    s
}

pub fn norm<const D: usize>(a: [f64; D]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub<const D: usize>(a: [f64; D], b: [f64; D]) -> [f64; D] {
    std::array::from_fn(|i| a[i] - b[i])
}

pub fn scale<const D: usize>(a: [f64; D], s: f64) -> [f64; D] {
    std::array::from_fn(|i| a[i] * s)
}

pub fn add<const D: usize>(a: [f64; D], b: [f64; D]) -> [f64; D] {
    std::array::from_fn(|i| a[i] + b[i])
}

/// Symmetric outer product `v (.) n = (v (x) n + n (x) v) / 2`.
pub fn sym_outer<const D: usize>(v: [f64; D], n: [f64; D]) -> [[f64; D]; D] {
    std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (v[i] * n[j] + n[i] * v[j])))
}

/// Double contraction `a : b`.
pub fn ddot<const D: usize>(a: [[f64; D]; D], b: [[f64; D]; D]) -> f64 {
    let mut s = 0.0;
    for i in 0..D {
        for j in 0..D {
            s += a[i][j] * b[i][j];
        }
    }
    s
}

/// Symmetric gradient of a vector field from its gradient rows
/// (`grad[i][j] = d v_i / d x_j`).
pub fn symmetrize<const D: usize>(grad: [[f64; D]; D]) -> [[f64; D]; D] {
    std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (grad[i][j] + grad[j][i])))
}

pub fn trace_mat<const D: usize>(a: [[f64; D]; D]) -> f64 {
    (0..D).map(|i| a[i][i]).sum()
}

/// Isotropic linear-elastic stress `2 mu eps + lambda tr(eps) I` from the
/// symmetric gradient.
pub fn isotropic_stress<const D: usize>(eps: [[f64; D]; D], mu: f64, lambda: f64) -> [[f64; D]; D] {
    let tr = trace_mat(eps);
    std::array::from_fn(|i| {
        std::array::from_fn(|j| 2.0 * mu * eps[i][j] + if i == j { lambda * tr } else { 0.0 })
    })
}

/// Matrix-vector product.
pub fn matvec<const D: usize>(a: [[f64; D]; D], v: [f64; D]) -> [f64; D] {
    std::array::from_fn(|i| dot(a[i], v))
}

/// Tangential part of a vector along a face with unit normal `n`:
/// `v_tau = v - (v . n) n`.
pub fn tangential<const D: usize>(v: [f64; D], n: [f64; D]) -> [f64; D] {
    let vn = dot(v, n);
    std::array::from_fn(|i| v[i] - vn * n[i])
}

/// Area of the 2D triangle `(a, b, c)`.
pub fn triangle_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs()
}

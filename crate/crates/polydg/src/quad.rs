//! Gauss quadrature on segments and simplices.
//!
//! Polytopal elements integrate by sub-tessellation: a Gauss rule exact to the
//! requested polynomial degree is mapped onto every sub-simplex of the
//! element, and onto every straight segment of a face. Simplex rules are
//! tensor-product Gauss-Legendre rules under a Duffy (collapsed-coordinate)
//! map, so exactness for total degree `order` holds by construction.

/// A quadrature rule in physical coordinates.
///
/// Weights carry the measure of the integration domain: `sum(weights)` equals
/// the measure of the element or face the rule was built for.
#[derive(Debug, Clone)]
pub struct QuadratureRule<const D: usize> {
    pub points: Vec<[f64; D]>,
    pub weights: Vec<f64>,
}

impl<const D: usize> QuadratureRule<D> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Total weight = measure of the integration domain.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Integrate a function against the rule.
    pub fn integrate(&self, mut f: impl FnMut([f64; D]) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
///
/// Nodes are the roots of the Legendre polynomial P_n, found by Newton
/// iteration from the Chebyshev initial guess; weights are
/// `2 / ((1 - x^2) P_n'(x)^2)`. Exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "a Gauss rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    // Symmetry: compute the non-negative half and mirror.
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_deriv(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (p2, d2) = legendre_with_deriv(n, x);
                dp = d2;
                x -= p2 / d2;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x; // cos is decreasing: i=0 gives the largest root
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Value and derivative of the Legendre polynomial P_n at x (three-term
/// recurrence).
fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    // P_n'(x) = n (x P_n - P_{n-1}) / (x^2 - 1)
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to `[0, 1]`, exact for degree `order`.
pub fn gauss_unit_interval(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order / 2 + 1; // 2n - 1 >= order
    let (x, w) = gauss_legendre(n);
    (
        x.iter().map(|&t| 0.5 * (t + 1.0)).collect(),
        w.iter().map(|&v| 0.5 * v).collect(),
    )
}

/// Quadrature on the reference triangle `{x, y >= 0, x + y <= 1}`, exact for
/// total degree `order`.
///
/// Built from the Duffy map `(s, t) -> (s (1 - t), s t)` with Jacobian `s`:
/// a monomial of total degree `p` pulls back to degree `p + 1` in `s` and
/// `p` in `t`, which fixes the per-direction Gauss orders.
pub fn reference_triangle(order: usize) -> QuadratureRule<2> {
    let (xs, ws) = gauss_unit_interval(order + 1);
    let (xt, wt) = gauss_unit_interval(order);
    let mut points = Vec::with_capacity(xs.len() * xt.len());
    let mut weights = Vec::with_capacity(points.capacity());
    for (&s, &w_s) in xs.iter().zip(&ws) {
        for (&t, &w_t) in xt.iter().zip(&wt) {
            points.push([s * (1.0 - t), s * t]);
            weights.push(w_s * w_t * s);
        }
    }
    QuadratureRule { points, weights }
}

/// Quadrature on the reference tetrahedron `{x, y, z >= 0, x + y + z <= 1}`,
/// exact for total degree `order`.
///
/// Collapsed map `(a, b, c) -> (a (1 - b)(1 - c), a b (1 - c), c)` with
/// Jacobian `a (1 - c)^2`.
pub fn reference_tetrahedron(order: usize) -> QuadratureRule<3> {
    let (xa, wa) = gauss_unit_interval(order + 1);
    let (xb, wb) = gauss_unit_interval(order);
    let (xc, wc) = gauss_unit_interval(order + 2);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (&a, &w_a) in xa.iter().zip(&wa) {
        for (&b, &w_b) in xb.iter().zip(&wb) {
            for (&c, &w_c) in xc.iter().zip(&wc) {
                points.push([a * (1.0 - b) * (1.0 - c), a * b * (1.0 - c), c]);
                weights.push(w_a * w_b * w_c * a * (1.0 - c) * (1.0 - c));
            }
        }
    }
    QuadratureRule { points, weights }
}

/// Map a reference-triangle rule onto the physical triangle `(v0, v1, v2)`.
///
/// Weights are scaled by `|det(v1 - v0, v2 - v0)|`, i.e. the physical-to-
/// reference measure ratio (the reference triangle has measure 1/2).
pub fn triangle_rule(v0: [f64; 2], v1: [f64; 2], v2: [f64; 2], order: usize) -> QuadratureRule<2> {
    let reference = reference_triangle(order);
    let e1 = [v1[0] - v0[0], v1[1] - v0[1]];
    let e2 = [v2[0] - v0[0], v2[1] - v0[1]];
    let det = (e1[0] * e2[1] - e1[1] * e2[0]).abs();
    let points = reference
        .points
        .iter()
        .map(|&[u, w]| [v0[0] + e1[0] * u + e2[0] * w, v0[1] + e1[1] * u + e2[1] * w])
        .collect();
    let weights = reference.weights.iter().map(|w| w * det).collect();
    QuadratureRule { points, weights }
}

/// Gauss rule on the physical segment `(a, b)`, exact for degree `order`
/// along the segment.
pub fn segment_rule(a: [f64; 2], b: [f64; 2], order: usize) -> QuadratureRule<2> {
    let (xs, ws) = gauss_unit_interval(order);
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let points = xs
        .iter()
        .map(|&s| [a[0] + (b[0] - a[0]) * s, a[1] + (b[1] - a[1]) * s])
        .collect();
    let weights = ws.iter().map(|w| w * len).collect();
    QuadratureRule { points, weights }
}

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::Mesh;
use crate::{Error, Point, Result};

pub type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;

/// Hölder regularity of the coefficients: `ell = 1` for `C^{0,α}` leading
/// coefficients (solutions `C^{1,α}`), `ell = 0` for merely bounded ones.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularityClass {
    pub ell: u8,
    pub alpha: f64,
}

impl RegularityClass {
    pub fn new(ell: u8, alpha: f64) -> Result<Self> {
        if ell > 1 {
            return Err(Error::invalid(format!("ell must be 0 or 1, got {ell}")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(RegularityClass { ell, alpha })
    }

    pub fn smooth() -> Self {
        RegularityClass { ell: 1, alpha: 0.9 }
    }

    pub fn rough() -> Self {
        RegularityClass { ell: 0, alpha: 0.1 }
    }
}

/// Symmetric 2×2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub fn identity() -> Self {
        Sym2::scalar(1.0)
    }

    pub fn scalar(s: f64) -> Self {
        Sym2 { xx: s, xy: 0.0, yy: s }
    }

    pub fn smallest_eigenvalue(&self) -> f64 {
        let mean = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        mean - half_diff.hypot(self.xy)
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.xx * v[0] + self.xy * v[1], self.xy * v[0] + self.yy * v[1]]
    }

    /// `R(θ) diag(l1, l2) R(θ)ᵀ`
    pub fn rotated(theta: f64, l1: f64, l2: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Sym2 {
            xx: l1 * c * c + l2 * s * s,
            xy: (l1 - l2) * c * s,
            yy: l1 * s * s + l2 * c * c,
        }
    }
}

/// Coefficients of `-div(a∇u + bu) + c·∇u + qu = 0` together with the claimed
/// ellipticity constant and regularity class.
#[derive(Clone)]
pub struct CoefficientField {
    a: Arc<dyn Fn(Point) -> Sym2 + Send + Sync>,
    b: Option<VectorField>,
    c: Option<VectorField>,
    q: Option<ScalarField>,
    lambda: f64,
    regularity: RegularityClass,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField")
            .field("has_b", &self.b.is_some())
            .field("has_c", &self.c.is_some())
            .field("has_q", &self.q.is_some())
            .field("lambda", &self.lambda)
            .field("regularity", &self.regularity)
            .finish()
    }
}

impl CoefficientField {
    /// Pure diffusion `-div(a∇u) = 0`. Symmetry of `a` holds by construction.
    pub fn diffusion(
        a: impl Fn(Point) -> Sym2 + Send + Sync + 'static,
        lambda: f64,
        regularity: RegularityClass,
    ) -> Self {
        CoefficientField {
            a: Arc::new(a),
            b: None,
            c: None,
            q: None,
            lambda,
            regularity,
        }
    }

    pub fn laplace() -> Self {
        Self::diffusion(|_| Sym2::identity(), 1.0, RegularityClass::smooth())
    }

    /// `-Δu - k²u = 0`
    pub fn helmholtz(k: f64) -> Self {
        let k2 = k * k;
        Self::laplace().with_q(move |_| -k2)
    }

    pub fn with_b(mut self, b: impl Fn(Point) -> [f64; 2] + Send + Sync + 'static) -> Self {
        self.b = Some(Arc::new(b));
        self
    }

    pub fn with_c(mut self, c: impl Fn(Point) -> [f64; 2] + Send + Sync + 'static) -> Self {
        self.c = Some(Arc::new(c));
        self
    }

    pub fn with_q(mut self, q: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        self.q = Some(Arc::new(q));
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_regularity(mut self, regularity: RegularityClass) -> Self {
        self.regularity = regularity;
        self
    }

    pub fn a(&self, p: Point) -> Sym2 {
        (self.a)(p)
    }

    pub fn b(&self, p: Point) -> [f64; 2] {
        self.b.as_ref().map_or([0.0, 0.0], |b| b(p))
    }

    pub fn c(&self, p: Point) -> [f64; 2] {
        self.c.as_ref().map_or([0.0, 0.0], |c| c(p))
    }

    pub fn q(&self, p: Point) -> f64 {
        self.q.as_ref().map_or(0.0, |q| q(p))
    }

    pub fn has_first_order_terms(&self) -> bool {
        self.b.is_some() || self.c.is_some()
    }

    pub fn has_potential(&self) -> bool {
        self.q.is_some()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn regularity(&self) -> RegularityClass {
        self.regularity
    }
}

/// Outcome of the pointwise ellipticity check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipticityCheck {
    pub passed: bool,
    /// Smallest eigenvalue of `a` found over all quadrature points.
    pub min_eigenvalue: f64,
    /// Quadrature point where it was found.
    pub worst_point: Point,
}

/// Checks `a(x)ξ·ξ ≥ λ|ξ|²` at every quadrature point of the mesh.
pub fn check_ellipticity(coeffs: &CoefficientField, mesh: &Mesh) -> EllipticityCheck {
    let mut worst = EllipticityCheck {
        passed: true,
        min_eigenvalue: f64::INFINITY,
        worst_point: [f64::NAN, f64::NAN],
    };
    for t in 0..mesh.triangles().len() {
        for p in mesh.quadrature_points(t) {
            let e = coeffs.a(p).smallest_eigenvalue();
            // NaN coefficients must fail too
            if e < worst.min_eigenvalue || e.is_nan() {
                worst.min_eigenvalue = e;
                worst.worst_point = p;
                if e.is_nan() {
                    worst.passed = false;
                    return worst;
                }
            }
        }
    }
    worst.passed = worst.min_eigenvalue >= coeffs.lambda();
    worst
}

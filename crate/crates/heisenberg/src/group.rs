//! Group law, dilations, Kaplan norms and left-invariant vector fields of ℍⁿ.
//!
//! A point is `(ξ, τ)` with `ξ = (x_1..x_n, y_1..y_n) ∈ ℝ^{2n}` holding the
//! real parts then the imaginary parts of `ξ ∈ ℂⁿ`. Two conventions are
//! supported. They differ only in the strength `κ` of the twist in the group
//! law and in the constant in front of `τ²` in the Kaplan norm:
//!
//! | convention | law                               | norm                 |
//! |------------|-----------------------------------|----------------------|
//! | `Std`      | `τ + τ̃ + ½ ω(ξ, ξ̃)`               | `(|ξ|⁴ + 16τ²)^{1/4}` |
//! | `FL`       | `τ + τ̃ + 2 ω(ξ, ξ̃)`               | `(|ξ|⁴ + τ²)^{1/4}`   |
//!
//! with `ω(ξ, ξ̃) = Σ_i (y_i x̃_i − x_i ỹ_i)`. With this pairing the fields
//! `X_i = ∂_{x_i} + κ y_i ∂_τ`, `Y_i = ∂_{y_i} − κ x_i ∂_τ` are exactly
//! left-invariant, and `T = [X_i, Y_i] = −2κ ∂_τ`.

use crate::error::{Error, Result};

/// Group-law convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Convention {
    /// Twist `½`, Kaplan norm `(|ξ|⁴ + 16τ²)^{1/4}`.
    Std,
    /// Twist `2`, Kaplan norm `(|ξ|⁴ + τ²)^{1/4}`.
    FL,
}

impl Convention {
    /// Coefficient `κ` of the symplectic pairing in the group law.
    pub fn kappa(self) -> f64 {
        match self {
            Convention::Std => 0.5,
            Convention::FL => 2.0,
        }
    }

    /// Coefficient of `τ²` inside the Kaplan norm.
    pub fn tau_weight(self) -> f64 {
        match self {
            Convention::Std => 16.0,
            Convention::FL => 1.0,
        }
    }
}

/// A point of ℍⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPoint {
    pub n: usize,
    /// Real parts `x_1..x_n` followed by imaginary parts `y_1..y_n`.
    pub xi: Vec<f64>,
    pub tau: f64,
}

impl GroupPoint {
    /// Build a point, checking that `xi` has length `2n`.
    pub fn new(n: usize, xi: Vec<f64>, tau: f64) -> Result<Self> {
        if n == 0 || xi.len() != 2 * n {
            return Err(Error::Dimension(format!(
                "expected 2n = {} horizontal coordinates, got {}",
                2 * n,
                xi.len()
            )));
        }
        Ok(Self { n, xi, tau })
    }

    /// The neutral element `(0, 0)`.
    pub fn identity(n: usize) -> Self {
        Self { n, xi: vec![0.0; 2 * n], tau: 0.0 }
    }

    /// `|ξ|²`.
    pub fn xi_norm_sq(&self) -> f64 {
        self.xi.iter().map(|v| v * v).sum()
    }
}

/// Symplectic pairing `ω(ξ, ξ̃) = Σ (y_i x̃_i − x_i ỹ_i)` on flat coordinate slices.
pub fn symplectic(xi: &[f64], xt: &[f64]) -> f64 {
    let n = xi.len() / 2;
    (0..n).map(|i| xi[n + i] * xt[i] - xi[i] * xt[n + i]).sum()
}

/// Group product `z1 ∘ z2`.
pub fn compose(z1: &GroupPoint, z2: &GroupPoint, c: Convention) -> Result<GroupPoint> {
    if z1.n != z2.n {
        return Err(Error::Dimension(format!("cannot compose points of ℍ^{} and ℍ^{}", z1.n, z2.n)));
    }
    let xi = z1.xi.iter().zip(&z2.xi).map(|(a, b)| a + b).collect();
    let tau = z1.tau + z2.tau + c.kappa() * symplectic(&z1.xi, &z2.xi);
    Ok(GroupPoint { n: z1.n, xi, tau })
}

/// Group inverse `(−ξ, −τ)`; the same in both conventions.
pub fn inverse(z: &GroupPoint) -> GroupPoint {
    GroupPoint { n: z.n, xi: z.xi.iter().map(|v| -v).collect(), tau: -z.tau }
}

/// Anisotropic dilation `δ_λ(ξ, τ) = (λξ, λ²τ)`.
pub fn dilate(lam: f64, z: &GroupPoint) -> GroupPoint {
    GroupPoint { n: z.n, xi: z.xi.iter().map(|v| lam * v).collect(), tau: lam * lam * z.tau }
}

/// Kaplan norm from `|ξ|²` and `τ`, used on grids to avoid allocating points.
pub fn kaplan_norm_parts(xi_sq: f64, tau: f64, c: Convention) -> f64 {
    (xi_sq * xi_sq + c.tau_weight() * tau * tau).sqrt().sqrt()
}

/// Homogeneous Kaplan norm of `z`.
pub fn kaplan_norm(z: &GroupPoint, c: Convention) -> f64 {
    kaplan_norm_parts(z.xi_norm_sq(), z.tau, c)
}

/// A left-invariant vector field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    /// `X_i` for `i` in `0..n`.
    X(usize),
    /// `Y_i` for `i` in `0..n`.
    Y(usize),
    /// The central field `T = [X_i, Y_i]`.
    T,
}

/// Default step for [`apply_field`].
pub const DEFAULT_STEP: f64 = 1e-4;

/// Evaluate `(F f)(z)` for a left-invariant field `F` with a second-order
/// central difference along the flow `t ↦ z ∘ exp(tF)`.
///
/// `f` receives the horizontal coordinates and `τ`.
pub fn apply_field<F>(f: F, z: &GroupPoint, field: Field, c: Convention, h: f64) -> Result<f64>
where
    F: Fn(&[f64], f64) -> f64,
{
    let n = z.n;
    let mut dir = GroupPoint::identity(n);
    match field {
        Field::X(i) | Field::Y(i) if i >= n => {
            return Err(Error::Dimension(format!("field index {i} out of range for ℍ^{n}")))
        }
        Field::X(i) => dir.xi[i] = h,
        Field::Y(i) => dir.xi[n + i] = h,
        Field::T => dir.tau = -2.0 * c.kappa() * h,
    }
    let plus = compose(z, &dir, c)?;
    let minus = compose(z, &inverse(&dir), c)?;
    Ok((f(&plus.xi, plus.tau) - f(&minus.xi, minus.tau)) / (2.0 * h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(v: [f64; 3]) -> GroupPoint {
        GroupPoint::new(1, vec![v[0], v[1]], v[2]).unwrap()
    }

    fn close(a: &GroupPoint, b: &GroupPoint, tol: f64) -> bool {
        a.xi.iter().zip(&b.xi).all(|(x, y)| (x - y).abs() < tol) && (a.tau - b.tau).abs() < tol
    }

    fn cubic(xi: &[f64], t: f64) -> f64 {
        let (x, y) = (xi[0], xi[1]);
        x * x * y + 0.3 * t * t * x - 1.7 * x * y * t + t * t * t + 2.0 * y
    }

    #[test]
    fn norm_examples() {
        let z = pt([0.0, 0.0, 1.0]);
        assert!((kaplan_norm(&z, Convention::Std) - 2.0).abs() < 1e-15);
        assert!((kaplan_norm(&z, Convention::FL) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn field_examples() {
        let z = pt([0.3, 2.0, -0.4]);
        let x = apply_field(|_, t| t, &z, Field::X(0), Convention::Std, DEFAULT_STEP).unwrap();
        assert!((x - 1.0).abs() < 1e-9);
        let t = apply_field(|_, t| t, &z, Field::T, Convention::Std, DEFAULT_STEP).unwrap();
        assert!((t + 1.0).abs() < 1e-9);
        assert!(apply_field(|_, t| t, &z, Field::Y(1), Convention::Std, 1e-4).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let a = GroupPoint::identity(1);
        let b = GroupPoint::identity(2);
        assert!(compose(&a, &b, Convention::Std).is_err());
        assert!(GroupPoint::new(2, vec![0.0; 3], 0.0).is_err());
    }

    fn commutator(c: Convention, fa: Field, fb: Field, z: &GroupPoint) -> f64 {
        let h = 1e-3;
        let bf = |xi: &[f64], t: f64| {
            let p = GroupPoint { n: z.n, xi: xi.to_vec(), tau: t };
            apply_field(cubic_n, &p, fb, c, h).unwrap()
        };
        let af = |xi: &[f64], t: f64| {
            let p = GroupPoint { n: z.n, xi: xi.to_vec(), tau: t };
            apply_field(cubic_n, &p, fa, c, h).unwrap()
        };
        apply_field(bf, z, fa, c, h).unwrap() - apply_field(af, z, fb, c, h).unwrap()
    }

    fn cubic_n(xi: &[f64], t: f64) -> f64 {
        let n = xi.len() / 2;
        let mut acc = t * t * t - 0.5 * t * t;
        for i in 0..n {
            acc += cubic(&[xi[i], xi[n + i]], t) * (1.0 + i as f64);
        }
        if n > 1 {
            acc += xi[0] * xi[n + 1] * t + xi[1] * xi[n] * xi[0];
        }
        acc
    }

    #[test]
    fn commutators_both_conventions() {
        let z = GroupPoint::new(2, vec![0.4, -0.2, 0.7, 1.1], 0.3).unwrap();
        for c in [Convention::Std, Convention::FL] {
            let t = apply_field(cubic_n, &z, Field::T, c, 1e-4).unwrap();
            let xy = commutator(c, Field::X(0), Field::Y(0), &z);
            assert!((xy - t).abs() < 1e-4 * (1.0 + t.abs()), "{c:?}: {xy} vs {t}");
            let cross = commutator(c, Field::X(0), Field::Y(1), &z);
            assert!(cross.abs() < 1e-4, "{c:?}: {cross}");
            let xx = commutator(c, Field::X(0), Field::X(1), &z);
            assert!(xx.abs() < 1e-4);
        }
    }

    fn conv() -> impl Strategy<Value = Convention> {
        prop_oneof![Just(Convention::Std), Just(Convention::FL)]
    }

    proptest! {
        #[test]
        fn associativity(a in prop::array::uniform3(-3.0..3.0f64),
                         b in prop::array::uniform3(-3.0..3.0f64),
                         d in prop::array::uniform3(-3.0..3.0f64),
                         c in conv()) {
            let (a, b, d) = (pt(a), pt(b), pt(d));
            let l = compose(&compose(&a, &b, c).unwrap(), &d, c).unwrap();
            let r = compose(&a, &compose(&b, &d, c).unwrap(), c).unwrap();
            prop_assert!(close(&l, &r, 1e-12));
        }

        #[test]
        fn identity_and_inverse(a in prop::array::uniform3(-5.0..5.0f64), c in conv()) {
            let z = pt(a);
            let e = GroupPoint::identity(1);
            prop_assert!(close(&compose(&z, &e, c).unwrap(), &z, 1e-15));
            prop_assert!(close(&compose(&e, &z, c).unwrap(), &z, 1e-15));
            prop_assert!(close(&compose(&z, &inverse(&z), c).unwrap(), &e, 1e-12));
            prop_assert!(close(&compose(&inverse(&z), &z, c).unwrap(), &e, 1e-12));
        }

        #[test]
        fn norm_homogeneity(a in prop::array::uniform3(-5.0..5.0f64), lam in 0.01..20.0f64, c in conv()) {
            let z = pt(a);
            let lhs = kaplan_norm(&dilate(lam, &z), c);
            let rhs = lam * kaplan_norm(&z, c);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
        }

        #[test]
        fn left_invariance(z0 in prop::array::uniform3(-2.0..2.0f64),
                           z in prop::array::uniform3(-2.0..2.0f64),
                           c in conv(), which in 0usize..3) {
            let (z0, z) = (pt(z0), pt(z));
            let field = [Field::X(0), Field::Y(0), Field::T][which];
            let translated = |xi: &[f64], t: f64| {
                let p = GroupPoint { n: 1, xi: xi.to_vec(), tau: t };
                let q = compose(&z0, &p, c).unwrap();
                cubic(&q.xi, q.tau)
            };
            let h = 1e-4;
            let lhs = apply_field(translated, &z, field, c, h).unwrap();
            let moved = compose(&z0, &z, c).unwrap();
            let rhs = apply_field(cubic, &moved, field, c, h).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-6 * (1.0 + rhs.abs()));
        }

        #[test]
        fn fields_match_coordinate_formulas(a in prop::array::uniform3(-2.0..2.0f64), c in conv()) {
            // X = ∂_x + κ y ∂_τ and Y = ∂_y − κ x ∂_τ via axis differences.
            let z = pt(a);
            let h = 1e-5;
            let d = |dx: f64, dy: f64, dt: f64| {
                (cubic(&[a[0] + dx, a[1] + dy], a[2] + dt) - cubic(&[a[0] - dx, a[1] - dy], a[2] - dt)) / (2.0 * h)
            };
            let (fx, fy, ft) = (d(h, 0.0, 0.0), d(0.0, h, 0.0), d(0.0, 0.0, h));
            let k = c.kappa();
            let x = apply_field(cubic, &z, Field::X(0), c, 1e-4).unwrap();
            let y = apply_field(cubic, &z, Field::Y(0), c, 1e-4).unwrap();
            prop_assert!((x - (fx + k * a[1] * ft)).abs() < 1e-5);
            prop_assert!((y - (fy - k * a[0] * ft)).abs() < 1e-5);
        }
    }
}

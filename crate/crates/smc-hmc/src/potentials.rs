//! Target potentials.
//!
//! Four model families, each with analytic gradient and declared curvature
//! constants: `K` (strong convexity, smallest curvature) and `L` (gradient
//! Lipschitz, largest curvature). For the non-quadratic wells the constants
//! are box-local bounds on `|x| <= 4`, stored rather than estimated. Every
//! kind has a stationary point at the origin; all except the double well
//! (minima at +-1) also have their zero-energy minimum there.

use crate::Error;

/// Half-width of the box on which the well constants are declared.
pub const WELL_BOX: f64 = 4.0;

/// Shared interface the integrators and samplers program against.
///
/// `Sync` is required so one model can serve many parallel trials;
/// models are immutable after construction.
pub trait Potential: Sync {
    fn dim(&self) -> usize;
    /// Potential energy `U(x)`.
    fn energy(&self, x: &[f64]) -> f64;
    /// Writes `grad U(x)` into `out`.
    fn gradient_into(&self, x: &[f64], out: &mut [f64]);
}

/// A concrete target from the built-in family.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialModel {
    /// `U(x) = k |x|^2 / 2` in `d` dimensions, curvature `k > 0`.
    IsotropicGaussian { curvature: f64, dim: usize },
    /// `U(x) = sum_j k_j x_j^2 / 2` with a diagonal curvature spectrum.
    AnisotropicGaussian { curvatures: Vec<f64> },
    /// `U(x) = (1 - x^2)^2 / 2`, one-dimensional and non-convex.
    ///
    /// Admitted for accuracy experiments only; `L = 94` bounds `|U''|` on
    /// the declared box.
    DoubleWell,
    /// `U(x) = x^2 / 2 + a |x|^{5/2}`, one-dimensional.
    ///
    /// Strongly convex with `K = 1`; the Hessian `1 + 3.75 a sqrt(|x|)` is
    /// not Lipschitz at the origin, which is exactly what makes it a useful
    /// rough target. `L = 1 + 7.5 a` bounds it on the box.
    RoughWell { roughness: f64 },
}

impl PotentialModel {
    pub fn isotropic(curvature: f64, dim: usize) -> Self {
        assert!(curvature > 0.0 && dim >= 1);
        PotentialModel::IsotropicGaussian { curvature, dim }
    }

    pub fn anisotropic(curvatures: Vec<f64>) -> Self {
        assert!(!curvatures.is_empty() && curvatures.iter().all(|&k| k > 0.0));
        PotentialModel::AnisotropicGaussian { curvatures }
    }

    pub fn rough(roughness: f64) -> Self {
        assert!(roughness >= 0.0);
        PotentialModel::RoughWell { roughness }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            PotentialModel::IsotropicGaussian { .. } => "isotropic_gaussian",
            PotentialModel::AnisotropicGaussian { .. } => "anisotropic_gaussian",
            PotentialModel::DoubleWell => "double_well",
            PotentialModel::RoughWell { .. } => "rough_well",
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(
            self,
            PotentialModel::IsotropicGaussian { .. } | PotentialModel::AnisotropicGaussian { .. }
        )
    }

    /// Diagonal curvature spectrum for Gaussian kinds, `None` otherwise.
    pub fn gaussian_curvatures(&self) -> Option<Vec<f64>> {
        match self {
            PotentialModel::IsotropicGaussian { curvature, dim } => Some(vec![*curvature; *dim]),
            PotentialModel::AnisotropicGaussian { curvatures } => Some(curvatures.clone()),
            _ => None,
        }
    }

    /// Strong-convexity constant `K`; `None` for the non-convex double well.
    pub fn strong_convexity(&self) -> Option<f64> {
        match self {
            PotentialModel::IsotropicGaussian { curvature, .. } => Some(*curvature),
            PotentialModel::AnisotropicGaussian { curvatures } => {
                curvatures.iter().copied().reduce(f64::min)
            }
            PotentialModel::DoubleWell => None,
            PotentialModel::RoughWell { .. } => Some(1.0),
        }
    }

    /// Gradient-Lipschitz constant `L` (box-local for the wells).
    pub fn gradient_lipschitz(&self) -> f64 {
        match self {
            PotentialModel::IsotropicGaussian { curvature, .. } => *curvature,
            PotentialModel::AnisotropicGaussian { curvatures } => {
                curvatures.iter().copied().fold(0.0, f64::max)
            }
            // max |6x^2 - 2| on |x| <= 4
            PotentialModel::DoubleWell => 94.0,
            // max 1 + 3.75 a sqrt(|x|) on |x| <= 4
            PotentialModel::RoughWell { roughness } => 1.0 + 7.5 * roughness,
        }
    }

    /// Box half-width on which `L` (and convexity checks) are declared;
    /// `None` means the constants hold globally.
    pub fn declared_box(&self) -> Option<f64> {
        match self {
            PotentialModel::DoubleWell | PotentialModel::RoughWell { .. } => Some(WELL_BOX),
            _ => None,
        }
    }
}

impl Potential for PotentialModel {
    fn dim(&self) -> usize {
        match self {
            PotentialModel::IsotropicGaussian { dim, .. } => *dim,
            PotentialModel::AnisotropicGaussian { curvatures } => curvatures.len(),
            PotentialModel::DoubleWell | PotentialModel::RoughWell { .. } => 1,
        }
    }

    fn energy(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim(), "dimension mismatch");
        match self {
            PotentialModel::IsotropicGaussian { curvature, .. } => {
                0.5 * curvature * x.iter().map(|xi| xi * xi).sum::<f64>()
            }
            PotentialModel::AnisotropicGaussian { curvatures } => {
                0.5 * x
                    .iter()
                    .zip(curvatures)
                    .map(|(xi, k)| k * xi * xi)
                    .sum::<f64>()
            }
            PotentialModel::DoubleWell => {
                let s = 1.0 - x[0] * x[0];
                0.5 * s * s
            }
            PotentialModel::RoughWell { roughness } => {
                let a = x[0].abs();
                0.5 * x[0] * x[0] + roughness * a * a.sqrt() * a.sqrt() * a.sqrt()
            }
        }
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.dim(), "dimension mismatch");
        assert_eq!(out.len(), self.dim(), "dimension mismatch");
        match self {
            PotentialModel::IsotropicGaussian { curvature, .. } => {
                for (g, xi) in out.iter_mut().zip(x) {
                    *g = curvature * xi;
                }
            }
            PotentialModel::AnisotropicGaussian { curvatures } => {
                for ((g, xi), k) in out.iter_mut().zip(x).zip(curvatures) {
                    *g = k * xi;
                }
            }
            PotentialModel::DoubleWell => {
                out[0] = 2.0 * x[0] * x[0] * x[0] - 2.0 * x[0];
            }
            PotentialModel::RoughWell { roughness } => {
                let a = x[0].abs();
                // d/dx a|x|^{5/2} = (5a/2) sign(x) |x|^{3/2}; zero at x = 0.
                out[0] = x[0] + 2.5 * roughness * x[0].signum() * a * a.sqrt();
            }
        }
    }
}

/// `U(x)` with dimension checking.
pub fn evaluate_potential(model: &PotentialModel, x: &[f64]) -> f64 {
    model.energy(x)
}

/// `grad U(x)` as a fresh vector.
pub fn evaluate_gradient(model: &PotentialModel, x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; model.dim()];
    model.gradient_into(x, &mut g);
    g
}

/// Central-difference gradient oracle, `O(step^2)` accurate.
pub fn finite_difference_gradient(model: &PotentialModel, x: &[f64], step: f64) -> Vec<f64> {
    assert!(step > 0.0, "finite difference step must be positive");
    assert_eq!(x.len(), model.dim(), "dimension mismatch");
    let mut probe = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        probe[i] = x[i] + step;
        let up = model.energy(&probe);
        probe[i] = x[i] - step;
        let down = model.energy(&probe);
        probe[i] = x[i];
        g[i] = (up - down) / (2.0 * step);
    }
    g
}

/// Co-coercivity residual `L <grad U(x) - grad U(y), x - y> - |grad U(x) - grad U(y)|^2`.
///
/// Nonnegative for the convex kinds whenever both points lie in the declared
/// box. Panics for the double well, which is not convex.
pub fn cocoercivity_residual(model: &PotentialModel, x: &[f64], y: &[f64]) -> f64 {
    assert!(
        !matches!(model, PotentialModel::DoubleWell),
        "co-coercivity is a convex-model property; double_well is non-convex"
    );
    let l = model.gradient_lipschitz();
    let gx = evaluate_gradient(model, x);
    let gy = evaluate_gradient(model, y);
    let mut inner = 0.0;
    let mut norm2 = 0.0;
    for i in 0..x.len() {
        let dg = gx[i] - gy[i];
        inner += dg * (x[i] - y[i]);
        norm2 += dg * dg;
    }
    l * inner - norm2
}

/// Parses a CLI model spec: `iso:k[,d]`, `aniso:k1,k2,...`, `double_well`,
/// `rough:a`.
pub fn parse_model(spec: &str) -> Result<PotentialModel, Error> {
    let bad = || Error::ModelParse(spec.to_string());
    let (kind, rest) = match spec.split_once(':') {
        Some((k, r)) => (k.trim(), Some(r.trim())),
        None => (spec.trim(), None),
    };
    match (kind, rest) {
        ("double_well", None) => Ok(PotentialModel::DoubleWell),
        ("iso" | "isotropic_gaussian", Some(r)) => {
            let parts: Vec<&str> = r.split(',').collect();
            if parts.is_empty() || parts.len() > 2 {
                return Err(bad());
            }
            let k: f64 = parts[0].trim().parse().map_err(|_| bad())?;
            let d: usize = match parts.get(1) {
                Some(p) => p.trim().parse().map_err(|_| bad())?,
                None => 1,
            };
            if !(k > 0.0 && k.is_finite()) || d < 1 {
                return Err(bad());
            }
            Ok(PotentialModel::isotropic(k, d))
        }
        ("aniso" | "anisotropic_gaussian", Some(r)) => {
            let ks: Result<Vec<f64>, _> = r.split(',').map(|p| p.trim().parse::<f64>()).collect();
            let ks = ks.map_err(|_| bad())?;
            if ks.is_empty() || ks.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
                return Err(bad());
            }
            Ok(PotentialModel::anisotropic(ks))
        }
        ("rough" | "rough_well", Some(r)) => {
            let a: f64 = r.trim().parse().map_err(|_| bad())?;
            if !(a >= 0.0 && a.is_finite()) {
                return Err(bad());
            }
            Ok(PotentialModel::rough(a))
        }
        _ => Err(bad()),
    }
}

impl std::str::FromStr for PotentialModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_model(s)
    }
}

/// Canonical spec string; round-trips through [`parse_model`].
impl std::fmt::Display for PotentialModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PotentialModel::IsotropicGaussian { curvature, dim } => {
                write!(f, "iso:{curvature},{dim}")
            }
            PotentialModel::AnisotropicGaussian { curvatures } => {
                write!(f, "aniso:")?;
                for (i, k) in curvatures.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{k}")?;
                }
                Ok(())
            }
            PotentialModel::DoubleWell => write!(f, "double_well"),
            PotentialModel::RoughWell { roughness } => write!(f, "rough:{roughness}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randomness::make_stream;

    fn models() -> Vec<PotentialModel> {
        vec![
            PotentialModel::isotropic(1.0, 1),
            PotentialModel::isotropic(2.0, 3),
            PotentialModel::anisotropic(vec![1.0, 4.0]),
            PotentialModel::DoubleWell,
            PotentialModel::rough(1.0),
            PotentialModel::rough(0.0),
        ]
    }

    #[test]
    fn energies_match_hand_values() {
        let iso = PotentialModel::isotropic(1.0, 1);
        assert_eq!(evaluate_potential(&iso, &[0.0]), 0.0);
        assert_eq!(evaluate_potential(&iso, &[2.0]), 2.0);
        assert_eq!(evaluate_potential(&PotentialModel::DoubleWell, &[1.0]), 0.0);
        assert_eq!(evaluate_potential(&PotentialModel::DoubleWell, &[0.0]), 0.5);
        let rough = PotentialModel::rough(1.0);
        assert_eq!(evaluate_potential(&rough, &[1.0]), 1.5);
        let aniso = PotentialModel::anisotropic(vec![1.0, 4.0]);
        assert_eq!(evaluate_potential(&aniso, &[1.0, 1.0]), 2.5);
    }

    #[test]
    fn gradients_match_hand_values() {
        let iso = PotentialModel::isotropic(1.0, 1);
        assert_eq!(evaluate_gradient(&iso, &[1.0]), vec![1.0]);
        assert_eq!(
            evaluate_gradient(&PotentialModel::DoubleWell, &[2.0]),
            vec![12.0]
        );
        for m in models() {
            let zero = vec![0.0; m.dim()];
            assert!(evaluate_gradient(&m, &zero).iter().all(|&g| g == 0.0));
            // The origin is the zero-energy minimum for every kind except
            // the double well, whose minima sit at +-1 (U(0) = 1/2 there).
            if m != PotentialModel::DoubleWell {
                assert_eq!(evaluate_potential(&m, &zero), 0.0);
            }
        }
    }

    #[test]
    fn finite_difference_agrees_everywhere() {
        let mut s = make_stream(21, 0);
        for m in models() {
            for _ in 0..100 {
                let x: Vec<f64> = (0..m.dim())
                    .map(|_| {
                        // Stay inside the declared box and away from the
                        // rough well's origin, where the third derivative
                        // blows up and central differences lose accuracy.
                        let mut xi = s.draw_uniform(-3.5, 3.5);
                        while matches!(m, PotentialModel::RoughWell { .. }) && xi.abs() < 0.05 {
                            xi = s.draw_uniform(-3.5, 3.5);
                        }
                        xi
                    })
                    .collect();
                let analytic = evaluate_gradient(&m, &x);
                let fd = finite_difference_gradient(&m, &x, 1e-5);
                let scale = analytic.iter().map(|g| g.abs()).fold(1.0_f64, f64::max);
                for (a, b) in analytic.iter().zip(&fd) {
                    assert!(
                        (a - b).abs() / scale < 1e-6,
                        "{}: grad {a} vs fd {b} at {x:?}",
                        m.kind_name()
                    );
                }
            }
        }
        // Pinned cases.
        let iso = PotentialModel::isotropic(1.0, 1);
        let fd = finite_difference_gradient(&iso, &[1.0], 1e-5);
        assert!((fd[0] - 1.0).abs() < 1e-8);
        let fd = finite_difference_gradient(&PotentialModel::DoubleWell, &[2.0], 1e-5);
        assert!((fd[0] - 12.0).abs() < 1e-6);
        for m in models() {
            let fd = finite_difference_gradient(&m, &vec![0.0; m.dim()], 1e-5);
            assert!(fd.iter().all(|g| g.abs() < 1e-8));
        }
    }

    #[test]
    fn monotonicity_bounds_for_gaussians() {
        // K |x-y|^2 <= <grad U(x) - grad U(y), x - y> <= L |x-y|^2
        let mut s = make_stream(22, 0);
        for m in [
            PotentialModel::isotropic(2.0, 3),
            PotentialModel::anisotropic(vec![0.5, 1.0, 4.0]),
        ] {
            let (k, l) = (m.strong_convexity().unwrap(), m.gradient_lipschitz());
            for _ in 0..1000 {
                let x: Vec<f64> = (0..m.dim()).map(|_| s.draw_uniform(-5.0, 5.0)).collect();
                let y: Vec<f64> = (0..m.dim()).map(|_| s.draw_uniform(-5.0, 5.0)).collect();
                let gx = evaluate_gradient(&m, &x);
                let gy = evaluate_gradient(&m, &y);
                let mut inner = 0.0;
                let mut d2 = 0.0;
                for i in 0..m.dim() {
                    inner += (gx[i] - gy[i]) * (x[i] - y[i]);
                    d2 += (x[i] - y[i]) * (x[i] - y[i]);
                }
                assert!(inner >= k * d2 - 1e-12 * d2.max(1.0));
                assert!(inner <= l * d2 + 1e-12 * d2.max(1.0));
            }
        }
    }

    #[test]
    fn cocoercivity_nonnegative_on_convex_kinds() {
        let mut s = make_stream(23, 0);
        for m in [
            PotentialModel::isotropic(1.0, 2),
            PotentialModel::anisotropic(vec![1.0, 4.0]),
            PotentialModel::rough(1.0),
        ] {
            let half = m.declared_box().unwrap_or(5.0);
            for _ in 0..1000 {
                let x: Vec<f64> = (0..m.dim()).map(|_| s.draw_uniform(-half, half)).collect();
                let y: Vec<f64> = (0..m.dim()).map(|_| s.draw_uniform(-half, half)).collect();
                let r = cocoercivity_residual(&m, &x, &y);
                assert!(r >= -1e-10, "{}: residual {r}", m.kind_name());
            }
        }
        // Hand cases.
        let iso = PotentialModel::isotropic(1.0, 1);
        assert_eq!(cocoercivity_residual(&iso, &[1.0], &[1.0]), 0.0);
        assert!(cocoercivity_residual(&iso, &[1.0], &[0.0]).abs() < 1e-15);
        let aniso = PotentialModel::anisotropic(vec![1.0, 4.0]);
        let r = cocoercivity_residual(&aniso, &[1.0, 0.0], &[0.0, 0.0]);
        assert!((r - 3.0).abs() < 1e-15);
    }

    #[test]
    #[should_panic(expected = "non-convex")]
    fn cocoercivity_rejects_double_well() {
        cocoercivity_residual(&PotentialModel::DoubleWell, &[1.0], &[0.0]);
    }

    #[test]
    fn constants_and_dims() {
        let m = PotentialModel::anisotropic(vec![1.0, 4.0, 9.0]);
        assert_eq!(m.strong_convexity(), Some(1.0));
        assert_eq!(m.gradient_lipschitz(), 9.0);
        assert_eq!(m.dim(), 3);
        assert_eq!(PotentialModel::DoubleWell.strong_convexity(), None);
        assert_eq!(PotentialModel::DoubleWell.gradient_lipschitz(), 94.0);
        assert_eq!(PotentialModel::rough(2.0).gradient_lipschitz(), 16.0);
        assert_eq!(PotentialModel::rough(2.0).strong_convexity(), Some(1.0));
    }

    #[test]
    fn parser_round_trips() {
        assert_eq!(
            parse_model("iso:1").unwrap(),
            PotentialModel::isotropic(1.0, 1)
        );
        assert_eq!(
            parse_model("iso:2.5,3").unwrap(),
            PotentialModel::isotropic(2.5, 3)
        );
        assert_eq!(
            parse_model("aniso:1,4,9").unwrap(),
            PotentialModel::anisotropic(vec![1.0, 4.0, 9.0])
        );
        assert_eq!(
            parse_model("double_well").unwrap(),
            PotentialModel::DoubleWell
        );
        assert_eq!(
            parse_model("rough:0.5").unwrap(),
            PotentialModel::rough(0.5)
        );
        for bad in [
            "iso",
            "iso:0",
            "iso:-1",
            "iso:1,0",
            "aniso:",
            "aniso:1,-4",
            "rough:-1",
            "banana",
            "double_well:1",
            "iso:1,2,3",
        ] {
            assert!(parse_model(bad).is_err(), "{bad} should not parse");
        }
    }
}

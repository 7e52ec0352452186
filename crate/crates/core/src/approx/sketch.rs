use crate::conic::expr::{AffineExpr, CAffine};

/// One convex constraint over the real decision vector.
#[derive(Clone, Debug, PartialEq)]
pub enum ConstraintSketch {
    /// `expr ≥ 0`.
    Affine(AffineExpr),
    /// `‖u‖² ≤ s θ` with `s, θ ≥ 0`.
    QuadOverAffine { u: Vec<AffineExpr>, s: AffineExpr, theta: AffineExpr },
    /// `c / θ ≤ s` with `c ≥ 0`, `θ > 0`.
    Hyperbolic { c: f64, s: AffineExpr, theta: AffineExpr },
    /// Hermitian `n × n` matrix, column-major, required PSD.
    PsdLmi { n: usize, entries: Vec<CAffine> },
}

impl ConstraintSketch {
    pub fn kind(&self) -> &'static str {
        match self {
            ConstraintSketch::Affine(_) => "affine",
            ConstraintSketch::QuadOverAffine { .. } => "quad-over-affine",
            ConstraintSketch::Hyperbolic { .. } => "hyperbolic",
            ConstraintSketch::PsdLmi { .. } => "psd-lmi",
        }
    }

    /// Signed slack at `x`: nonnegative iff satisfied (minimum eigenvalue for LMIs).
    pub fn slack(&self, x: &[f64]) -> f64 {
        match self {
            ConstraintSketch::Affine(e) => e.eval(x),
            ConstraintSketch::QuadOverAffine { u, s, theta } => {
                let (s, t) = (s.eval(x), theta.eval(x));
                let q: f64 = u.iter().map(|e| e.eval(x).powi(2)).sum();
                (s * t - q).min(s).min(t)
            }
            ConstraintSketch::Hyperbolic { c, s, theta } => {
                let (s, t) = (s.eval(x), theta.eval(x));
                (s * t - c).min(s).min(t)
            }
            ConstraintSketch::PsdLmi { n, entries } => {
                let m = crate::scalar::CMat::from_fn(*n, *n, |r, c| entries[c * n + r].eval(x));
                let herm = (&m + m.adjoint()) * num_complex::Complex::new(0.5, 0.0);
                nalgebra::SymmetricEigen::new(herm).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
            }
        }
    }

    pub fn max_index(&self) -> Option<usize> {
        let it: Vec<Option<usize>> = match self {
            ConstraintSketch::Affine(e) => vec![e.max_index()],
            ConstraintSketch::QuadOverAffine { u, s, theta } => {
                u.iter().map(|e| e.max_index()).chain([s.max_index(), theta.max_index()]).collect()
            }
            ConstraintSketch::Hyperbolic { s, theta, .. } => vec![s.max_index(), theta.max_index()],
            ConstraintSketch::PsdLmi { entries, .. } => {
                entries.iter().flat_map(|e| [e.re.max_index(), e.im.max_index()]).collect()
            }
        };
        it.into_iter().flatten().max()
    }
}

/// What a family of sketches constrains; used for counts and debug output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    DlRate,
    DlTrust,
    DlPhase,
    UlRate,
    UlNonneg,
    UlPower,
    EveDlCap,
    EveDlAux,
    EveUlCap,
    EveUlAux,
    BsPower,
    TimeShare,
    WcsTrust,
    Objective,
}

/// A group of sketches standing for one constraint of the convex model.
#[derive(Clone, Debug, PartialEq)]
pub struct Family {
    pub kind: FamilyKind,
    pub sketches: Vec<ConstraintSketch>,
}

impl Family {
    pub fn new(kind: FamilyKind) -> Self {
        Family { kind, sketches: vec![] }
    }

    pub fn push(&mut self, s: ConstraintSketch) {
        self.sketches.push(s);
    }

    pub fn is_eve(&self) -> bool {
        matches!(
            self.kind,
            FamilyKind::EveDlCap | FamilyKind::EveDlAux | FamilyKind::EveUlCap | FamilyKind::EveUlAux | FamilyKind::WcsTrust
        )
    }

    pub fn slack(&self, x: &[f64]) -> f64 {
        self.sketches.iter().map(|s| s.slack(x)).fold(f64::INFINITY, f64::min)
    }
}

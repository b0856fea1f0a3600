use alloc::boxed::Box;
use alloc::string::String;

use super::{Graph, ModelError};
use crate::linalg::{
    kron_eigen, kronecker, symmetric_eigen, DenseSymmetric, Matrix, PseudoInverseResult,
    SymmetricEigen, DEFAULT_PINV_TOL,
};

/// Shape of a latent effect's structure matrix `R`.
#[derive(Debug, Clone, PartialEq)]
pub enum ComponentKind {
    Intercept,
    FixedSlope,
    Iid(usize),
    Rw1(usize),
    Rw2(usize),
    Besag(Graph),
    Kron2(Box<ComponentKind>, Box<ComponentKind>),
    Kron3(Box<ComponentKind>, Box<ComponentKind>, Box<ComponentKind>),
}

impl ComponentKind {
    pub fn kron2(a: ComponentKind, b: ComponentKind) -> Self {
        Self::Kron2(Box::new(a), Box::new(b))
    }

    pub fn kron3(a: ComponentKind, b: ComponentKind, c: ComponentKind) -> Self {
        Self::Kron3(Box::new(a), Box::new(b), Box::new(c))
    }

    pub fn size(&self) -> usize {
        match self {
            Self::Intercept | Self::FixedSlope => 1,
            Self::Iid(n) | Self::Rw1(n) | Self::Rw2(n) => *n,
            Self::Besag(g) => g.n(),
            Self::Kron2(a, b) => a.size() * b.size(),
            Self::Kron3(a, b, c) => a.size() * b.size() * c.size(),
        }
    }

    /// Whether this is a scalar fixed effect with a weak Gaussian prior.
    pub fn is_fixed_effect(&self) -> bool {
        matches!(self, Self::Intercept | Self::FixedSlope)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Intercept => "intercept",
            Self::FixedSlope => "fixed_slope",
            Self::Iid(_) => "iid",
            Self::Rw1(_) => "rw1",
            Self::Rw2(_) => "rw2",
            Self::Besag(_) => "besag",
            Self::Kron2(..) => "kron2",
            Self::Kron3(..) => "kron3",
        }
    }

    /// Fixed structure matrix `R`.
    pub fn structure(&self) -> Result<DenseSymmetric, ModelError> {
        Ok(match self {
            Self::Intercept | Self::FixedSlope => DenseSymmetric::identity(1),
            Self::Iid(n) => DenseSymmetric::identity(*n),
            Self::Rw1(n) => difference_gram(*n, 1),
            Self::Rw2(n) => difference_gram(*n, 2),
            Self::Besag(g) => g.structure(),
            Self::Kron2(a, b) => kronecker(&a.structure()?, &b.structure()?)?,
            Self::Kron3(a, b, c) => {
                kronecker(&kronecker(&a.structure()?, &b.structure()?)?, &c.structure()?)?
            }
        })
    }

    /// Eigendecomposition of `R`, assembled from the factors for Kronecker kinds.
    pub fn eigen(&self) -> Result<SymmetricEigen, ModelError> {
        Ok(match self {
            Self::Kron2(a, b) => kron_eigen(&a.eigen()?, &b.eigen()?),
            Self::Kron3(a, b, c) => kron_eigen(&kron_eigen(&a.eigen()?, &b.eigen()?), &c.eigen()?),
            other => symmetric_eigen(&other.structure()?)?,
        })
    }
}

/// `DᵀD` for the order-`order` difference operator on `n` points.
fn difference_gram(n: usize, order: usize) -> DenseSymmetric {
    if n <= order {
        return DenseSymmetric::zeros(n);
    }
    let stencil: &[f64] = if order == 1 { &[-1.0, 1.0] } else { &[1.0, -2.0, 1.0] };
    let rows = n - order;
    let mut d = Matrix::zeros(rows, n);
    for r in 0..rows {
        for (k, c) in stencil.iter().enumerate() {
            d[(r, r + k)] = *c;
        }
    }
    d.weighted_gram(&alloc::vec![1.0; rows])
        .expect("weights match the row count")
}

/// Where a component's precision `τ` comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Precision {
    /// `τ = exp(θ[index])`.
    Hyper(usize),
    /// Fixed log-precision.
    Fixed(f64),
}

/// One block of the latent field with precision `τ·R`.
#[derive(Debug, Clone)]
pub struct LatentComponent {
    pub name: String,
    pub kind: ComponentKind,
    pub size: usize,
    pub structure: DenseSymmetric,
    pub rank_deficiency: usize,
    pub precision: Precision,
    spectral: PseudoInverseResult,
}

impl LatentComponent {
    pub fn new(name: impl Into<String>, kind: ComponentKind, precision: Precision) -> Result<Self, ModelError> {
        let size = kind.size();
        if size == 0 {
            return Err(ModelError::EmptyComponent);
        }
        let structure = kind.structure()?;
        let spectral = PseudoInverseResult::from_eigen(&kind.eigen()?, DEFAULT_PINV_TOL);
        Ok(Self {
            name: name.into(),
            size,
            rank_deficiency: spectral.deficiency(),
            structure,
            precision,
            spectral,
            kind,
        })
    }

    pub fn hyper_index(&self) -> Option<usize> {
        match self.precision {
            Precision::Hyper(i) => Some(i),
            Precision::Fixed(_) => None,
        }
    }

    pub fn log_precision(&self, theta: &[f64]) -> f64 {
        match self.precision {
            Precision::Hyper(i) => theta[i],
            Precision::Fixed(v) => v,
        }
    }

    /// Pseudo-inverse, null basis and pseudo-determinant of `R` (not of `τR`).
    pub fn spectral(&self) -> &PseudoInverseResult {
        &self.spectral
    }
}

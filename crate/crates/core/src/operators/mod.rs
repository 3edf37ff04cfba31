//! Nonlocal operators on the periodic grid.

pub mod quadrature;
pub mod riesz;
pub mod spectral;

pub use quadrature::{GagliardoForms, NonlocalQuadrature, QuadratureOptions};
pub use riesz::{riesz_convolve, HartreeCache};
pub use spectral::{spectral_frac_laplacian, FftNd, Preconditioner, SpectralLaplacian};

//! Landau collision machinery: kernel, Maxwellian tensors, the linearized
//! operator with its coercive/compact splitting, the bilinear term, the
//! dissipation norm and the implicit diffusion solver.

pub mod fft;
pub mod implicit;
pub mod kernel;
pub mod norms;
pub mod operator;
pub mod tensors;

pub use implicit::DiffusionMatrix;
pub use kernel::{phi_kernel, smooth_cutoff, Sym3};
pub use norms::{l2d_norm_sq, sigma_form_sq, weight_w, DissipationNormSpec, WeightParams};
pub use operator::{apply_a_and_k, apply_gamma, apply_gamma_direct, apply_l, GammaSource, SplitParts};
pub use tensors::{sigma_direct, CollisionTensors, KernelPart, SplitParams};

//! Permutation-invariant point-cloud network mapping an attributed ONH cloud
//! to 52 visual field defect probabilities.

mod adam;
mod loss;
mod net;
mod params;
mod vf;

pub use adam::{adam_step, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use loss::{bce_loss, BCE_EPS};
pub use net::{backward, batch_gradient, forward, Gradients};
pub use params::{init_params, layout, Architecture, LayerLayout, ModelParams, INPUT_FEATURES, VF_POINTS};
pub use vf::{predict, VisualFieldMap, DEFAULT_THRESHOLD};

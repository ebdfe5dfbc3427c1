//! Dense neural-network pieces: gradient tape, GIN encoder, inner-product
//! decoder, observed-block loss and the Adam optimizer.

pub mod adam;
pub mod gin;
pub mod tape;

pub use adam::{adam_step, AdamState};
pub use gin::{
    aggregate, bce_loss_observed, decode_probabilities, encode_decode, gin_forward,
    gin_layer_forward, Checkpoint, GinLayer, GinModel, GinShape, LayerInput, NamedTensor,
};
pub use tape::{sigmoid, Gradients, Tape, Var};

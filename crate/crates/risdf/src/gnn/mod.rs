//! Two-phase permutation-equivariant GNN: feature extraction, node
//! updates, readouts, phase quantization and power normalization as one
//! differentiable pass.

pub mod forward;
pub mod inputs;
pub mod params;

pub use forward::{
    finish_train_graph, forward, forward_pinned, forward_with_candidates, loss_node, phase1_init,
    phase1_readout, phase1_update, phase2_forward, select_eval_from_graph, sinr_graph,
    train_loss_graph, train_loss_graph_with, ForwardGraph, LossSpec, Mode, Phase1State,
    Phase2Cache, TrainForward,
};
pub use inputs::GnnInputs;
pub use params::{load_checkpoint, save_checkpoint, GnnDims, GnnParams};

//! Offline-to-streaming distillation of the phone-and-prosody predictor.

pub mod ablate;
pub mod eval;
pub mod gradcheck;
pub mod loss;
pub mod optim;
pub mod train;

pub use ablate::{run_ablation, AblationRow, AblationTable};
pub use eval::{eval_wer, score_predictions, EvalReport, SubsetStats};
pub use gradcheck::{finite_difference_check, GradCheckReport};
pub use loss::{batch_loss, LossBreakdown, LossWeights, Prepared};
pub use optim::Adam;
pub use train::{prosody_stats, train, TrainConfig, TrainOutcome};

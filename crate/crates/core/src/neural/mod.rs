//! The pinyin student, the character teacher, and everything needed to
//! train, verify and store them. All arithmetic is `f64` with hand-written
//! reverse-mode gradients.

pub mod checkpoint;
mod data;
mod encoder;
mod gradcheck;
mod loss;
mod model;
mod optim;
mod tensor;
mod train;

pub use data::{NameEncoder, TokenizerMode, TrainingExample};
pub use encoder::{EncoderCache, EncoderParams, ENCODER_TENSORS};
pub use gradcheck::{gradient_check, GradCheckConfig, GradCheckReport, MAX_BATCH};
pub use loss::{
    compute_losses, kl_divergence, kl_divergence_logits, loss_and_gradients, teacher_targets,
    LossBreakdown, LossOptions, LossSwitches, TeacherTarget,
};
pub use model::{
    forward_student, forward_teacher, Parameters, StudentModel, StudentOutput, TeacherModel,
    TeacherOutput,
};
pub use optim::Adam;
pub use tensor::{log_softmax, softmax, Tensor};
pub use train::{
    accuracy, predict_gender, prepare_examples, train, train_models, write_trace, EpochTrace,
    GenderModel, TrainConfig, TrainOutcome,
};

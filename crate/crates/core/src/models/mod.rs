//! Surrogate models, model training with the constancy check, and the error
//! measures used to score them.

pub mod forest;
pub mod gp;
pub mod measures;
pub mod optim;
pub mod poly;
pub mod train;

pub use forest::{forest_predict, forest_train, ForestModel, ForestSettings, Split, SplitStrategy};
pub use gp::{gp_cov, gp_fit, gp_nll, gp_predict, CovKind, CovParams, GpConfig, GpHyper, GpModel};
pub use measures::{mse, rde, rde_denominator, ErrorPair};
pub use poly::{fit_quadratic_ls, train_lmm, train_lq, LmmModel, PolyKind, PolyModel};
pub use train::{train_model, Fitted, ModelFamily, ModelSettings, TrainedModel};

//! Group-lasso penalized logistic regression for presence-only
//! (positive-unlabeled) data under case-control sampling.
//!
//! The model treats the unlabeled set as a mixture with known prevalence
//! `pi` and fits `theta` by majorization-minimization: each iteration takes
//! an E-step on the latent labels, bounds the complete-data loss by a
//! quadratic, and solves the resulting group-lasso least squares problem by
//! block coordinate descent on a per-group orthonormalized design.
//!
//! ```
//! use pulasso::{Design, GroupSpec, PuDataset, SolverConfig, Standardizer, StorageMode};
//!
//! let x = Design::dense_from_rows(4, 1, &[2.0, 1.0, -1.0, -2.0]).unwrap();
//! let data = PuDataset::new(x, vec![true, true, false, false], 0.5).unwrap();
//! let sd = Standardizer::build(data.x(), &GroupSpec::singletons(1), StorageMode::Dense).unwrap();
//! let lmax = pulasso::lambda_max(&data, &sd).unwrap();
//! let fit = pulasso::pulasso_fit(&data, &sd, 1.01 * lmax, None, &SolverConfig::default()).unwrap();
//! assert_eq!(fit.theta[1], 0.0);
//! ```

pub mod design;
pub mod error;
pub mod evaluate;
pub mod io;
pub mod model;
pub mod rng;
pub mod simulate;
pub mod solver;
pub mod standardize;

pub use design::{CscMatrix, Design};
pub use error::{Error, Result};
pub use model::{log1pexp, logit, predict_prob_y, sigmoid, theta_null, Likelihood, LogisticDataset, OffsetB, PuDataset};
pub use solver::{
    bcd_dense, bcd_sparse, em_fit, fit, fit_path, kkt_check, lambda_grid, lambda_max, objective, penalty,
    pulasso_fit, soft_threshold, Algorithm, FitResult, PathConfig, SolverConfig,
};
pub use evaluate::{adjusted_roc, cross_validate, f1_score, misclassification_rate, stability_score, CvConfig, CvResult, RocCurve};
pub use simulate::{gen_mixture, Scheme, SimConfig, SimData};
pub use standardize::{GroupSpec, Standardizer, StorageMode};

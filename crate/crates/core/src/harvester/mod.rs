//! Nonlinear harvester models: the physics-based Taylor diode figure of merit
//! and the log-domain polynomial curve fit.

mod fit;
mod io;
mod taylor;

pub use fit::{fit_logpoly, FitDataset, FitEvaluation, FitReport, LogPolyFitModel};
pub use io::{load_fit_dataset, load_model, read_fit_dataset, read_model, write_model};
pub use taylor::{DiodeParams, Scheme, TaylorDiodeModel, ZdcTerms, JENSEN_SLACK};

//! Property checkers for Feller-type regularity, irreducibility and
//! generalized couplings.

mod certificate;
mod envelope;
mod feller;
mod generalized;
mod provider;
mod verdict;

pub use certificate::AsfPlusCertificate;
pub use envelope::{Envelope, RateFn};
pub use feller::{
    asf_profile, check_asf_plus, check_lwi, AsfPlusRecord, AsfPlusReport, AsfProfile, LwiRecord, LwiReport, CHECK_TOL,
};
pub use generalized::{
    fit_asf_plus_envelope, theorem23_construction, verify_a1, verify_a2, A1Record, A1Report, A2Record, A2Report,
    GluingOutcome,
};
pub use provider::{
    checked_joint, BuiltinProvider, CouplingProvider, DiagonalProvider, IndependentProvider, ProviderEntry,
    ProviderFile, TableProvider,
};
pub use verdict::{
    support_separation, uniqueness_verdict, LwiParams, SeparationReport, Verdict, REASON_ASF_PLUS, REASON_LWI,
    REASON_UNBOUNDED, SUPPORT_TOL,
};

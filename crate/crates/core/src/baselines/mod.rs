//! Non-neural comparators: majority lookup, syllable Naive Bayes, source
//! consensus, and conversion to characters followed by the character model.

mod cct;
mod conversion;
mod frequency;
mod naive_bayes;

pub use cct::{
    cct_fit, cct_predict, read_reports, read_reports_from, CctConfig, CctModel, Consensus,
    SourceReport, INITIAL_COMPETENCE, MAX_COMPETENCE, MIN_COMPETENCE,
};
pub use conversion::{conversion_predict, convert_to_hanzi};
pub use frequency::{frequency_predict, FrequencyTable};
pub use naive_bayes::{nb_fit, nb_predict, NaiveBayesModel};

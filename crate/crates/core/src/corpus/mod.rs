//! Labeled name records: ingestion, vocabularies, splits, streaming
//! statistics and synthetic corpora.

mod records;
mod split;
mod stats;
mod synth;
mod vocab;

pub use records::{
    read_records, read_records_from, write_records, write_records_file, write_rejects, Gender,
    Ingested, NameRecord, RecordReader, Reject, MAX_HANZI_LEN,
};
pub use split::{fold_complement, kfold_split, split_dataset, DatasetSplit};
pub use stats::{
    build_statistics, build_statistics_from_file, GenderCounts, NameStatistics, StatisticsBuilder,
};
pub use synth::{generate_synthetic, SynthChar, SynthSpec};
pub use vocab::{build_vocab, record_tokens, Vocab, VocabMode, AGG, PAD, UNK};

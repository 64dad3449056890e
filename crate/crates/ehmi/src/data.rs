//! Files compiled into the binary: schemas, the five replication answer
//! sets, the CPI table and the golden tables.

use ehmi_core::answers::ProposalAnswerSet;
use ehmi_core::costkit::CpiTable;

use crate::io::{parse_answers, parse_cpi_csv};

/// Schema files by name, in load order.
pub const SCHEMA_FILES: [(&str, &str); 8] = [
    ("standardization.toml", include_str!("../data/schemas/standardization.toml")),
    ("cost.toml", include_str!("../data/schemas/cost.toml")),
    ("accessibility.toml", include_str!("../data/schemas/accessibility.toml")),
    ("ease.toml", include_str!("../data/schemas/ease.toml")),
    ("communication.toml", include_str!("../data/schemas/communication.toml")),
    ("positioning.toml", include_str!("../data/schemas/positioning.toml")),
    ("readability.toml", include_str!("../data/schemas/readability.toml")),
    ("readability-results.toml", include_str!("../data/schemas/readability-results.toml")),
];

/// Replication answer sets by file stem.
pub const ANSWER_FILES: [(&str, &str); 5] = [
    ("no_ehmi", include_str!("../data/answers/no_ehmi.eval")),
    ("fbl", include_str!("../data/answers/fbl.eval")),
    ("krd", include_str!("../data/answers/krd.eval")),
    ("bsd", include_str!("../data/answers/bsd.eval")),
    ("btd", include_str!("../data/answers/btd.eval")),
];

pub const CPI_CSV: &str = include_str!("../data/cpi.csv");

/// Published replication values, checked by `ehmi replicate`.
pub const PUBLISHED: &str = include_str!("../data/golden/published.toml");
/// Text export of the final comparison under unit weights.
pub const GOLDEN_FINAL: &str = include_str!("../data/golden/final.txt");
/// CSV export of the cost table.
pub const GOLDEN_COST: &str = include_str!("../data/golden/cost.csv");

/// The five replication answer sets, in table order.
pub fn bundled_answers() -> Vec<ProposalAnswerSet> {
    ANSWER_FILES
        .iter()
        .map(|(name, text)| parse_answers(text).unwrap_or_else(|e| panic!("bundled answers {name}: {e}")))
        .collect()
}

pub fn bundled_answer(stem: &str) -> Option<ProposalAnswerSet> {
    ANSWER_FILES
        .iter()
        .find(|(name, _)| *name == stem)
        .map(|(name, text)| parse_answers(text).unwrap_or_else(|e| panic!("bundled answers {name}: {e}")))
}

pub fn bundled_cpi() -> CpiTable {
    parse_cpi_csv(CPI_CSV).expect("bundled CPI table")
}

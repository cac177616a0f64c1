//! The structure-token alphabet and conversions between annotations, token
//! sequences and table skeletons.

pub mod codec;
pub mod forms;
pub mod grammar;
pub mod vocab;

pub use codec::{
    decode_to_skeleton, encode_annotation, encode_tokens, CellAnchor, CellKind, CodecError, EncodeOptions, Encoded,
    StructureSequence, DEFAULT_MAX_LEN,
};
pub use forms::{classify_empty_cell, CellClass, EmptyFormTable, FormError};
pub use grammar::{has_fatal, validate_sequence, Severity, Violation, ViolationKind};
pub use vocab::{build_vocabulary, Token, Vocabulary};

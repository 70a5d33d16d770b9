//! Error type. Every variant names the violated invariant and carries enough
//! context to point at the offending item.

use alloc::string::String;
use core::fmt;

/// Violations of the structural and algebraic invariants.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Error {
    // algebra
    NotAssociative { algebra: String, triple: (usize, usize, usize) },
    NotUnital { algebra: String, basis: usize },
    PairingDegenerate { algebra: String },
    PairingNotInvariant { algebra: String, triple: (usize, usize, usize) },
    OddDegreeBasis { algebra: String, basis: usize },
    NotAlgebraMap { map: String, pair: (usize, usize) },
    NotDegreePreserving { map: String, basis: usize },
    FieldMismatch { expected: String, found: String },
    UnknownBrane { label: String },

    // surface / arc graph
    ParallelArcs { arcs: (usize, usize) },
    InessentialArc { arc: usize },
    SideUsage { detail: String },
    EulerMismatch { regions_total: i64, expected: i64 },
    OrphanPuncture { puncture: String },
    MalformedSurface { detail: String },
    MalformedGraph { detail: String },

    // gluing
    WeightMismatch { left: u64, right: u64 },
    InactiveWindow { window: usize },
    KindMismatch,

    // bar complexes and correlators
    DegreeMismatch { expected: usize, found: usize },
    IndexOutOfRange { index: usize, len: usize },
    NotReduced,
    UnknownBasisLabel { label: String },
    ZeroSpace,

    // correlator evaluation
    NonCommutativeAmbiguity,
    UnvalidatedGraph { detail: String },
    NotSullivanType { detail: String },
    PairingMismatch { detail: String },
    UnsupportedAction { detail: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NotAssociative { algebra, triple } => write!(
                f,
                "NotAssociative: algebra '{algebra}' fails associativity on basis triple {triple:?}"
            ),
            Error::NotUnital { algebra, basis } => {
                write!(f, "NotUnital: algebra '{algebra}' unit fails on basis element {basis}")
            }
            Error::PairingDegenerate { algebra } => {
                write!(f, "PairingDegenerate: algebra '{algebra}' trace pairing is not invertible")
            }
            Error::PairingNotInvariant { algebra, triple } => write!(
                f,
                "PairingNotInvariant: algebra '{algebra}' violates <ab,c> = <a,bc> on {triple:?}"
            ),
            Error::OddDegreeBasis { algebra, basis } => write!(
                f,
                "OddDegreeBasis: algebra '{algebra}' basis element {basis} has odd degree"
            ),
            Error::NotAlgebraMap { map, pair } => write!(
                f,
                "NotAlgebraMap: map '{map}' fails multiplicativity on basis pair {pair:?}"
            ),
            Error::NotDegreePreserving { map, basis } => write!(
                f,
                "NotDegreePreserving: map '{map}' shifts the degree of basis element {basis}"
            ),
            Error::FieldMismatch { expected, found } => {
                write!(f, "FieldMismatch: expected field {expected}, found {found}")
            }
            Error::UnknownBrane { label } => write!(f, "UnknownBrane: no algebra for label '{label}'"),
            Error::ParallelArcs { arcs } => {
                write!(f, "ParallelArcs: arcs {} and {} bound an unmarked rectangle", arcs.0, arcs.1)
            }
            Error::InessentialArc { arc } => write!(
                f,
                "InessentialArc: arc {arc} cuts off a bigon along boundary free of labelled points"
            ),
            Error::SideUsage { detail } => write!(f, "SideUsage: {detail}"),
            Error::EulerMismatch { regions_total, expected } => write!(
                f,
                "EulerMismatch: region Euler characteristics sum to {regions_total}, surface + arcs give {expected}"
            ),
            Error::OrphanPuncture { puncture } => {
                write!(f, "OrphanPuncture: puncture '{puncture}' not assigned to exactly one region")
            }
            Error::MalformedSurface { detail } => write!(f, "MalformedSurface: {detail}"),
            Error::MalformedGraph { detail } => write!(f, "MalformedGraph: {detail}"),
            Error::WeightMismatch { left, right } => {
                write!(f, "WeightMismatch: window weights {left} and {right} differ")
            }
            Error::InactiveWindow { window } => {
                write!(f, "InactiveWindow: window {window} carries no arc ends")
            }
            Error::KindMismatch => write!(f, "KindMismatch: cannot glue an open window to a closed one"),
            Error::DegreeMismatch { expected, found } => {
                write!(f, "DegreeMismatch: expected degree {expected}, found {found}")
            }
            Error::IndexOutOfRange { index, len } => {
                write!(f, "IndexOutOfRange: index {index} out of range for length {len}")
            }
            Error::NotReduced => write!(f, "NotReduced: closed-sector element has a unit middle factor"),
            Error::UnknownBasisLabel { label } => {
                write!(f, "UnknownBasisLabel: no basis element labelled '{label}'")
            }
            Error::ZeroSpace => write!(f, "ZeroSpace: element of a zero algebra requested"),
            Error::NonCommutativeAmbiguity => write!(
                f,
                "NonCommutativeAmbiguity: region with several boundary cycles over a non-commutative closed algebra"
            ),
            Error::UnvalidatedGraph { detail } => write!(f, "UnvalidatedGraph: {detail}"),
            Error::NotSullivanType { detail } => write!(f, "NotSullivanType: {detail}"),
            Error::PairingMismatch { detail } => write!(f, "PairingMismatch: {detail}"),
            Error::UnsupportedAction { detail } => write!(f, "UnsupportedAction: {detail}"),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at {line}:{col}: expected {expected}")]
    SyntaxError { line: usize, col: usize, expected: String },
    #[error("undeclared name `{0}`")]
    UndeclaredName(String),
    #[error("arity mismatch: {0}")]
    ArityMismatch(String),
    #[error("communication function is not symmetric: {0}")]
    AsymmetricGamma(String),
    #[error("empty domain for binder `{0}`")]
    EmptyDomain(String),
    #[error("model error: {0}")]
    Invalid(String),
    #[error("undeclared predicate `{0}`")]
    UndeclaredPredicate(String),
    #[error("mailbox `{0}` is full")]
    MailboxFull(String),
    #[error("unguarded recursion in spec `{spec}` at `{var}`")]
    UnguardedRecursion { spec: String, var: String },
    #[error("conflict elimination used without declared conflicts: {0}")]
    UndeclaredConflictPair(String),
    #[error("state bound {0} exceeded")]
    StateBoundExceeded(usize),
    #[error("unsupported construct for event structures: {0}")]
    UnsupportedConstruct(String),
    #[error("explosion guard: more than {0} configurations")]
    ExplosionGuard(usize),
    #[error("axiom {axiom} does not match at {pos}")]
    NoMatch { axiom: String, pos: String },
    #[error("side condition failed: {0}")]
    SideConditionFailed(String),
    #[error("fuel {0} exhausted")]
    FuelExhausted(usize),
    #[error("non-basic residue: {0}")]
    NonBasicResidue(String),
    #[error("unbound template parameter `{0}`")]
    UnboundParam(String),
    #[error("persistence violation: {0}")]
    PersistenceViolation(String),
    #[error("duplicate mailbox `{0}`")]
    DuplicateMailbox(String),
    #[error("send with no receiver: {0}")]
    DanglingSend(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

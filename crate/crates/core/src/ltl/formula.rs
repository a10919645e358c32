use std::fmt;

/// Atomic proposition `(mode, label)`; `label = None` is the wildcard
/// `(mode,*)`, true in every state of that mode.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub mode: String,
    pub label: Option<String>,
}

impl Atom {
    pub fn new(mode: &str, label: &str) -> Self {
        Self { mode: mode.to_string(), label: Some(label.to_string()) }
    }

    pub fn wildcard(mode: &str) -> Self {
        Self { mode: mode.to_string(), label: None }
    }

    pub fn matches(&self, mode: &str, label: &str) -> bool {
        self.mode == mode && self.label.as_deref().is_none_or(|l| l == label)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.mode, self.label.as_deref().unwrap_or("*"))
    }
}

/// LTL over the primitive connectives. Conjunction, implication, `F` and `G`
/// are provided as constructors that rewrite into these.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Ltl {
    True,
    False,
    Atom(Atom),
    Not(Box<Ltl>),
    Or(Box<Ltl>, Box<Ltl>),
    Next(Box<Ltl>),
    Until(Box<Ltl>, Box<Ltl>),
}

impl Ltl {
    pub fn atom(mode: &str, label: &str) -> Self {
        Ltl::Atom(Atom::new(mode, label))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        Ltl::Not(Box::new(self))
    }

    pub fn or(self, other: Ltl) -> Self {
        Ltl::Or(Box::new(self), Box::new(other))
    }

    pub fn and(self, other: Ltl) -> Self {
        self.not().or(other.not()).not()
    }

    pub fn implies(self, other: Ltl) -> Self {
        self.not().or(other)
    }

    pub fn next(self) -> Self {
        Ltl::Next(Box::new(self))
    }

    pub fn until(self, other: Ltl) -> Self {
        Ltl::Until(Box::new(self), Box::new(other))
    }

    pub fn eventually(self) -> Self {
        Ltl::True.until(self)
    }

    pub fn globally(self) -> Self {
        self.not().eventually().not()
    }

    /// Nesting depth of `X` and `U`.
    pub fn temporal_depth(&self) -> usize {
        match self {
            Ltl::True | Ltl::False | Ltl::Atom(_) => 0,
            Ltl::Not(a) => a.temporal_depth(),
            Ltl::Or(a, b) => a.temporal_depth().max(b.temporal_depth()),
            Ltl::Next(a) => 1 + a.temporal_depth(),
            Ltl::Until(a, b) => 1 + a.temporal_depth().max(b.temporal_depth()),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Ltl::True | Ltl::False | Ltl::Atom(_) => 1,
            Ltl::Not(a) | Ltl::Next(a) => 1 + a.size(),
            Ltl::Or(a, b) | Ltl::Until(a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Distinct atoms in first-occurrence order.
    pub fn atoms(&self) -> Vec<Atom> {
        fn walk(f: &Ltl, out: &mut Vec<Atom>) {
            match f {
                Ltl::True | Ltl::False => {}
                Ltl::Atom(a) => {
                    if !out.contains(a) {
                        out.push(a.clone());
                    }
                }
                Ltl::Not(a) | Ltl::Next(a) => walk(a, out),
                Ltl::Or(a, b) | Ltl::Until(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    pub fn to_nnf(&self) -> Nnf {
        nnf(self, false)
    }
}

impl fmt::Display for Ltl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ltl::True => f.write_str("true"),
            Ltl::False => f.write_str("false"),
            Ltl::Atom(a) => write!(f, "{a}"),
            Ltl::Not(a) => write!(f, "!{a}"),
            Ltl::Or(a, b) => write!(f, "({a} | {b})"),
            Ltl::Next(a) => write!(f, "X {a}"),
            Ltl::Until(a, b) => write!(f, "({a} U {b})"),
        }
    }
}

/// Negation normal form; `Release` is the dual of `Until`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Nnf {
    True,
    False,
    Atom(Atom),
    NegAtom(Atom),
    And(Box<Nnf>, Box<Nnf>),
    Or(Box<Nnf>, Box<Nnf>),
    Next(Box<Nnf>),
    Until(Box<Nnf>, Box<Nnf>),
    Release(Box<Nnf>, Box<Nnf>),
}

fn nnf(f: &Ltl, neg: bool) -> Nnf {
    let b = |x: Nnf| Box::new(x);
    match (f, neg) {
        (Ltl::True, false) | (Ltl::False, true) => Nnf::True,
        (Ltl::True, true) | (Ltl::False, false) => Nnf::False,
        (Ltl::Atom(a), false) => Nnf::Atom(a.clone()),
        (Ltl::Atom(a), true) => Nnf::NegAtom(a.clone()),
        (Ltl::Not(a), _) => nnf(a, !neg),
        (Ltl::Or(x, y), false) => Nnf::Or(b(nnf(x, false)), b(nnf(y, false))),
        (Ltl::Or(x, y), true) => Nnf::And(b(nnf(x, true)), b(nnf(y, true))),
        (Ltl::Next(x), _) => Nnf::Next(b(nnf(x, neg))),
        (Ltl::Until(x, y), false) => Nnf::Until(b(nnf(x, false)), b(nnf(y, false))),
        (Ltl::Until(x, y), true) => Nnf::Release(b(nnf(x, true)), b(nnf(y, true))),
    }
}

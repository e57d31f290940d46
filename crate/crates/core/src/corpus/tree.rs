use std::fmt;

/// Head assignment for every token of a sentence.
///
/// `heads()[i]` is the head of token `i + 1`; positions are 1-based and `0`
/// denotes the abstract ROOT.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DepTree {
    heads: Vec<usize>,
}

impl DepTree {
    /// Wraps a head vector without validating it. Use [`validate_tree`] or
    /// [`DepTree::validated`] when the source is untrusted.
    pub fn new(heads: Vec<usize>) -> Self {
        DepTree { heads }
    }

    pub fn validated(heads: Vec<usize>) -> Result<Self, TreeViolation> {
        validate_tree(&heads)?;
        Ok(DepTree { heads })
    }

    pub fn heads(&self) -> &[usize] {
        &self.heads
    }

    pub fn into_heads(self) -> Vec<usize> {
        self.heads
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    /// Head of 1-based token `token`.
    pub fn head(&self, token: usize) -> usize {
        self.heads[token - 1]
    }

    /// First token attached to ROOT, if any.
    pub fn root(&self) -> Option<usize> {
        self.heads.iter().position(|&h| h == 0).map(|i| i + 1)
    }

    /// Number of dependents of every token, indexed by 1-based position
    /// (slot 0 counts root attachments).
    pub fn dependent_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.heads.len() + 1];
        for &h in &self.heads {
            if h < counts.len() {
                counts[h] += 1;
            }
        }
        counts
    }
}

/// The first dependency-grammar axiom a head vector violates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeViolation {
    Empty,
    HeadOutOfRange {
        token: usize,
        head: usize,
    },
    SelfLoop {
        token: usize,
    },
    /// Two arcs, given as `(dependent, head)`, whose spans interleave.
    Crossing {
        first: (usize, usize),
        second: (usize, usize),
    },
    Cycle {
        token: usize,
    },
    NoRoot,
    MultipleRoots {
        first: usize,
        second: usize,
    },
}

impl TreeViolation {
    pub fn kind(&self) -> &'static str {
        match self {
            TreeViolation::Empty => "empty",
            TreeViolation::HeadOutOfRange { .. } => "head-out-of-range",
            TreeViolation::SelfLoop { .. } => "self-loop",
            TreeViolation::Crossing { .. } => "crossing",
            TreeViolation::Cycle { .. } => "cycle",
            TreeViolation::NoRoot => "no-root",
            TreeViolation::MultipleRoots { .. } => "multiple-roots",
        }
    }
}

impl fmt::Display for TreeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeViolation::Empty => write!(f, "tree has no tokens"),
            TreeViolation::HeadOutOfRange { token, head } => {
                write!(f, "token {token} has head {head} outside the sentence")
            }
            TreeViolation::SelfLoop { token } => write!(f, "token {token} is its own head"),
            TreeViolation::Crossing { first, second } => write!(
                f,
                "arc {}->{} crosses arc {}->{}",
                first.1, first.0, second.1, second.0
            ),
            TreeViolation::Cycle { token } => {
                write!(f, "token {token} is part of a dependency cycle")
            }
            TreeViolation::NoRoot => write!(f, "no token is attached to ROOT"),
            TreeViolation::MultipleRoots { first, second } => {
                write!(f, "tokens {first} and {second} are both attached to ROOT")
            }
        }
    }
}

impl std::error::Error for TreeViolation {}

/// Checks a head vector against the dependency-tree axioms.
///
/// Checks run in a fixed order: head range and self-attachment, crossing
/// arcs, cycles, and finally the single-root requirement. The first failure
/// is reported.
pub fn validate_tree(heads: &[usize]) -> Result<(), TreeViolation> {
    let n = heads.len();
    if n == 0 {
        return Err(TreeViolation::Empty);
    }
    for (i, &h) in heads.iter().enumerate() {
        if h > n {
            return Err(TreeViolation::HeadOutOfRange {
                token: i + 1,
                head: h,
            });
        }
        if h == i + 1 {
            return Err(TreeViolation::SelfLoop { token: i + 1 });
        }
    }
    if let Some((first, second)) = first_crossing(heads) {
        return Err(TreeViolation::Crossing { first, second });
    }
    if let Some(token) = first_cycle(heads) {
        return Err(TreeViolation::Cycle { token });
    }
    let mut roots = heads.iter().enumerate().filter(|(_, &h)| h == 0);
    match (roots.next(), roots.next()) {
        (None, _) => Err(TreeViolation::NoRoot),
        (Some(_), None) => Ok(()),
        (Some((a, _)), Some((b, _))) => Err(TreeViolation::MultipleRoots {
            first: a + 1,
            second: b + 1,
        }),
    }
}

/// True iff no two arcs cross. ROOT sits at position 0, so an arc to ROOT
/// spans from 0 to the root token and no arc may cover the root.
pub fn is_projective(heads: &[usize]) -> bool {
    first_crossing(heads).is_none()
}

fn first_crossing(heads: &[usize]) -> Option<((usize, usize), (usize, usize))> {
    let spans: Vec<(usize, usize)> = heads
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            let d = i + 1;
            (d.min(h), d.max(h))
        })
        .collect();
    for a in 0..spans.len() {
        let (l1, r1) = spans[a];
        for b in a + 1..spans.len() {
            let (l2, r2) = spans[b];
            if (l1 < l2 && l2 < r1 && r1 < r2) || (l2 < l1 && l1 < r2 && r2 < r1) {
                return Some(((a + 1, heads[a]), (b + 1, heads[b])));
            }
        }
    }
    None
}

fn first_cycle(heads: &[usize]) -> Option<usize> {
    let n = heads.len();
    // 0 = unvisited, 1 = on current path, 2 = reaches ROOT
    let mut state = vec![0u8; n + 1];
    state[0] = 2;
    for start in 1..=n {
        let mut path = Vec::new();
        let mut cur = start;
        while state[cur] == 0 {
            state[cur] = 1;
            path.push(cur);
            cur = heads[cur - 1];
        }
        if state[cur] == 1 {
            return Some(cur);
        }
        for p in path {
            state[p] = 2;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    const KING_CAMEL: [usize; 7] = [2, 5, 2, 3, 0, 7, 5];

    #[test]
    fn example_tree_is_valid() {
        assert_eq!(validate_tree(&KING_CAMEL), Ok(()));
        assert!(is_projective(&KING_CAMEL));
    }

    #[test]
    fn mutual_heads_are_a_cycle() {
        assert!(matches!(
            validate_tree(&[2, 1]),
            Err(TreeViolation::Cycle { .. })
        ));
    }

    #[test]
    fn interleaved_arcs_cross() {
        let v = validate_tree(&[0, 4, 1, 2]).unwrap_err();
        assert_eq!(v.kind(), "crossing");
        assert!(!is_projective(&[0, 4, 1, 2]));
    }

    #[test]
    fn chain_is_projective() {
        assert!(is_projective(&[2, 0, 2]));
    }

    #[test]
    fn arc_over_root_is_not_projective() {
        // 1 <- 3 covers the root token 2
        assert!(!is_projective(&[3, 0, 2]));
        assert_eq!(validate_tree(&[3, 0, 2]).unwrap_err().kind(), "crossing");
    }

    #[test]
    fn root_count_violations() {
        assert_eq!(
            validate_tree(&[0, 0]),
            Err(TreeViolation::MultipleRoots {
                first: 1,
                second: 2
            })
        );
        assert_eq!(validate_tree(&[]), Err(TreeViolation::Empty));
        assert_eq!(
            validate_tree(&[0, 5]),
            Err(TreeViolation::HeadOutOfRange { token: 2, head: 5 })
        );
        assert_eq!(
            validate_tree(&[1]),
            Err(TreeViolation::SelfLoop { token: 1 })
        );
    }

    #[test]
    fn tree_accessors() {
        let t = DepTree::new(KING_CAMEL.to_vec());
        assert_eq!(t.root(), Some(5));
        assert_eq!(t.head(4), 3);
        let deps = t.dependent_counts();
        assert_eq!(deps[2], 2);
        assert_eq!(deps[5], 2);
        assert_eq!(deps[0], 1);
    }
}

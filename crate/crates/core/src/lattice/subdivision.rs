//! The one-plaquette subdivision pattern and free-group words over its edges.
//!
//! A coarse plaquette is split into four sub-plaquettes. Half edges of the
//! coarse boundary are `g1..g4`, interior edges meeting at the centre are
//! `y1..y4`, and `G1..G4` are the boundary holonomies entering each
//! sub-loop. Eight transverse plaquettes `T1..T8` hang off the midpoints and
//! enter the integrand only through their own kernel factor.

use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::group::{GroupElement, GroupKind};
use crate::lattice::PlaquetteRef;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Half(u8),
    Interior(u8),
    Boundary(u8),
    Transverse(u8),
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Half(i) => write!(f, "g{i}"),
            Symbol::Interior(i) => write!(f, "y{i}"),
            Symbol::Boundary(i) => write!(f, "G{i}"),
            Symbol::Transverse(i) => write!(f, "T{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Letter {
    pub symbol: Symbol,
    pub inverse: bool,
}

impl Letter {
    pub fn new(symbol: Symbol) -> Self {
        Letter {
            symbol,
            inverse: false,
        }
    }

    pub fn inv(self) -> Self {
        Letter {
            inverse: !self.inverse,
            ..self
        }
    }
}

/// A word in the free group on the pattern's symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(pub Vec<Letter>);

impl Word {
    /// Parses whitespace-separated letters such as `"g1^-1 G1 g2"`.
    pub fn parse(s: &str) -> Result<Word> {
        let mut letters = Vec::new();
        for tok in s.split_whitespace() {
            let (name, inverse) = match tok.strip_suffix("^-1") {
                Some(n) => (n, true),
                None => (tok, false),
            };
            let mut chars = name.chars();
            let head = chars.next();
            let idx: u8 = chars
                .as_str()
                .parse()
                .map_err(|_| invalid("word", format!("bad letter {tok:?}")))?;
            let symbol = match head {
                Some('g') => Symbol::Half(idx),
                Some('y') => Symbol::Interior(idx),
                Some('G') => Symbol::Boundary(idx),
                Some('T') => Symbol::Transverse(idx),
                _ => return Err(invalid("word", format!("bad letter {tok:?}"))),
            };
            letters.push(Letter { symbol, inverse });
        }
        Ok(Word(letters))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inv()).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        Word(self.0.iter().chain(&other.0).copied().collect())
    }

    /// Free reduction: cancels adjacent `x x⁻¹` pairs.
    pub fn reduced(&self) -> Word {
        let mut out: Vec<Letter> = Vec::with_capacity(self.0.len());
        for &l in &self.0 {
            if out.last() == Some(&l.inv()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    /// Free reduction followed by cancellation across the ends.
    pub fn cyclically_reduced(&self) -> Word {
        let mut w = self.reduced().0;
        while w.len() >= 2 && w[0] == w[w.len() - 1].inv() {
            w.pop();
            w.remove(0);
        }
        Word(w)
    }

    /// Cyclic rotation starting at letter `k`.
    pub fn rotate(&self, k: usize) -> Word {
        if self.0.is_empty() {
            return self.clone();
        }
        let k = k % self.0.len();
        Word(self.0[k..].iter().chain(&self.0[..k]).copied().collect())
    }

    pub fn contains(&self, symbol: Symbol) -> bool {
        self.0.iter().any(|l| l.symbol == symbol)
    }

    pub fn count(&self, symbol: Symbol) -> usize {
        self.0.iter().filter(|l| l.symbol == symbol).count()
    }

    /// Evaluates the word for an assignment of group elements to symbols.
    pub fn evaluate<F>(&self, kind: GroupKind, mut assign: F) -> Result<GroupElement>
    where
        F: FnMut(Symbol) -> GroupElement,
    {
        let mut acc = kind.identity();
        for l in &self.0 {
            let g = assign(l.symbol);
            acc = acc.multiply(&if l.inverse { g.inverse() } else { g })?;
        }
        Ok(acc)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}", l.symbol)?;
            if l.inverse {
                f.write_str("^-1")?;
            }
        }
        Ok(())
    }
}

/// One kernel factor of the fine-lattice integrand and the fraction of the
/// coarse `β` it carries.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub word: Word,
    pub beta_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubdivisionPattern {
    pub coarse: PlaquetteRef,
    pub half_edges: [Symbol; 4],
    pub interior: [Symbol; 4],
    pub boundary: [Symbol; 4],
    pub transverse: [Symbol; 8],
    /// Sub-plaquette loops in the order they appear in the integrand.
    pub sub_loops: [Word; 4],
    /// `G1 G2 G3⁻¹ G4⁻¹`.
    pub outer: Word,
}

const SUB_LOOPS: [&str; 4] = [
    "g1^-1 G1 g2 y2^-1 y1^-1",
    "y2 g2^-1 G2 g3^-1 y3^-1",
    "y4 y3 g3 G3^-1 g4^-1",
    "g1 y1 y4^-1 g4 G4^-1",
];

/// Subdivides plaquette `p` into the standard four-square pattern.
pub fn refine_plaquette(p: &PlaquetteRef) -> Result<SubdivisionPattern> {
    if p.signs != PlaquetteRef::SIGNS {
        return Err(invalid("plaquette", format!("unexpected orientation {:?}", p.signs)));
    }
    if p.axes.0 >= p.axes.1 {
        return Err(invalid("plaquette", format!("axes {:?} not increasing", p.axes)));
    }
    let sub_loops = SUB_LOOPS.map(|s| Word::parse(s).expect("static word"));
    Ok(SubdivisionPattern {
        coarse: *p,
        half_edges: std::array::from_fn(|i| Symbol::Half(i as u8 + 1)),
        interior: std::array::from_fn(|i| Symbol::Interior(i as u8 + 1)),
        boundary: std::array::from_fn(|i| Symbol::Boundary(i as u8 + 1)),
        transverse: std::array::from_fn(|i| Symbol::Transverse(i as u8 + 1)),
        sub_loops,
        outer: Word::parse("G1 G2 G3^-1 G4^-1").expect("static word"),
    })
}

/// Result of integrating out the interior variables symbolically.
#[derive(Debug, Clone, PartialEq)]
pub struct Telescoped {
    /// Rotation applied to each sub-loop to expose `X_i⁻¹ c_i X_{i+1}`.
    pub rotations: [usize; 4],
    /// `X_i`: each contains exactly one half edge and is Haar-distributed
    /// when that half edge is.
    pub substitutions: [Word; 4],
    /// The central letters `c_i`; their product is the outer loop.
    pub chain: Vec<Letter>,
}

impl SubdivisionPattern {
    /// All kernel factors: four sub-loops and eight transverse plaquettes,
    /// each a half-size square at `β/4`.
    pub fn factors(&self) -> Vec<Factor> {
        self.sub_loops
            .iter()
            .cloned()
            .chain(self.transverse.iter().map(|&t| Word(vec![Letter::new(t)])))
            .map(|word| Factor {
                word,
                beta_fraction: 0.25,
            })
            .collect()
    }

    /// Rewrites the sub-loops as `X_i⁻¹ c_i X_{i+1}` (indices mod 4) so that
    /// the integrals over the `X_i` become a chain of convolutions.
    pub fn telescope(&self) -> Result<Telescoped> {
        let g = |i: usize| Letter::new(self.half_edges[i]);
        let y = |i: usize| Letter::new(self.interior[i]);
        let substitutions = [
            Word(vec![g(0), y(0)]),
            Word(vec![g(1), y(1).inv()]),
            Word(vec![g(2).inv(), y(2).inv()]),
            Word(vec![g(3).inv(), y(3)]),
        ];
        let mut rotations = [0; 4];
        let mut chain = Vec::with_capacity(4);
        for (i, w) in self.sub_loops.iter().enumerate() {
            let x_in = &substitutions[i];
            let x_out = &substitutions[(i + 1) % 4];
            let found = (0..w.len()).find_map(|r| {
                let rotated = w.rotate(r);
                let core = Word(rotated.0[x_in.len()..rotated.len() - x_out.len()].to_vec());
                let rebuilt = x_in.inverse().concat(&core).concat(x_out);
                (rebuilt == rotated && core.len() == 1).then(|| (r, core.0[0]))
            });
            let (r, c) = found.ok_or_else(|| {
                Error::Unsupported(format!("sub-loop {w} does not telescope"))
            })?;
            rotations[i] = r;
            chain.push(c);
        }
        if Word(chain.clone()) != self.outer {
            return Err(Error::Unsupported(format!(
                "chain {} differs from outer loop {}",
                Word(chain.clone()),
                self.outer
            )));
        }
        Ok(Telescoped {
            rotations,
            substitutions,
            chain,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Boundary, Lattice, LatticeSpec};

    fn pattern() -> SubdivisionPattern {
        let l = Lattice::build(LatticeSpec::new(vec![2, 2], 0, Boundary::Open).unwrap()).unwrap();
        refine_plaquette(&l.plaquettes()[0]).unwrap()
    }

    #[test]
    fn words_round_trip_and_reduce() {
        let w = Word::parse("g1^-1 G1 g2 y2^-1 y1^-1").unwrap();
        assert_eq!(w.to_string(), "g1^-1 G1 g2 y2^-1 y1^-1");
        assert!(w.concat(&w.inverse()).reduced().is_empty());
        let c = Word::parse("y1 g1 G1 g1^-1 y1^-1").unwrap();
        assert_eq!(c.cyclically_reduced(), Word::parse("G1").unwrap());
        assert!(Word::parse("q1").is_err());
        assert!(Word::parse("gx").is_err());
    }

    #[test]
    fn sub_loops_match_integrand() {
        let p = pattern();
        let printed: Vec<String> = p.sub_loops.iter().map(|w| w.to_string()).collect();
        assert_eq!(printed, SUB_LOOPS);
        assert_eq!(p.outer.to_string(), "G1 G2 G3^-1 G4^-1");
    }

    #[test]
    fn each_sub_loop_has_two_half_and_two_interior_edges() {
        let p = pattern();
        for w in &p.sub_loops {
            let halves = p.half_edges.iter().filter(|&&s| w.contains(s)).count();
            let inner = p.interior.iter().filter(|&&s| w.contains(s)).count();
            assert_eq!((halves, inner, w.len()), (2, 2, 5));
        }
        // every half and interior edge is shared by exactly two sub-loops,
        // once in each direction
        for s in p.half_edges.iter().chain(&p.interior) {
            let uses: Vec<bool> = p
                .sub_loops
                .iter()
                .flat_map(|w| w.0.iter().filter(|l| l.symbol == *s).map(|l| l.inverse))
                .collect();
            assert_eq!(uses.len(), 2, "{s}");
            assert_ne!(uses[0], uses[1], "{s}");
        }
    }

    #[test]
    fn transverse_slots_are_isolated() {
        let p = pattern();
        let factors = p.factors();
        assert_eq!(factors.len(), 12);
        for t in p.transverse {
            assert_eq!(factors.iter().filter(|f| f.word.contains(t)).count(), 1);
        }
        assert!(factors.iter().all(|f| f.beta_fraction == 0.25));
    }

    #[test]
    fn telescoping_reproduces_outer_loop() {
        let p = pattern();
        let t = p.telescope().unwrap();
        let mut product = Word::default();
        for (w, &r) in p.sub_loops.iter().zip(&t.rotations) {
            product = product.concat(&w.rotate(r));
        }
        assert_eq!(product.cyclically_reduced(), p.outer);
        for (i, x) in t.substitutions.iter().enumerate() {
            assert_eq!(x.count(p.half_edges[i]), 1);
        }
    }

    #[test]
    fn brute_force_rotations_agree() {
        // every rotation choice whose product cancels to the outer loop
        let p = pattern();
        let t = p.telescope().unwrap();
        let mut hits = Vec::new();
        for code in 0..625usize {
            let rot: [usize; 4] = std::array::from_fn(|i| code / 5usize.pow(i as u32) % 5);
            let mut product = Word::default();
            for (w, &r) in p.sub_loops.iter().zip(&rot) {
                product = product.concat(&w.rotate(r));
            }
            if product.reduced().cyclically_reduced() == p.outer {
                hits.push(rot);
            }
        }
        assert!(hits.contains(&t.rotations));
    }

    #[test]
    fn words_evaluate_consistently() {
        use rand::SeedableRng;
        let p = pattern();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let kind = GroupKind::UnitQuaternion;
        let vals: Vec<GroupElement> = (0..16).map(|_| kind.haar_sample(&mut rng)).collect();
        let assign = |s: Symbol| match s {
            Symbol::Half(i) => vals[i as usize - 1],
            Symbol::Interior(i) => vals[i as usize + 3],
            Symbol::Boundary(i) => vals[i as usize + 7],
            Symbol::Transverse(i) => vals[8 + (i as usize - 1) % 8],
        };
        let t = p.telescope().unwrap();
        let mut prod = kind.identity();
        for (w, &r) in p.sub_loops.iter().zip(&t.rotations) {
            prod = prod * w.rotate(r).evaluate(kind, assign).unwrap();
        }
        let outer = p.outer.evaluate(kind, assign).unwrap();
        assert!((prod.class_angle() - outer.class_angle()).abs() < 1e-10);
    }
}

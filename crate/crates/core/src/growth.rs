//! Brute-force counts of products `b_1 ⋯ b_n` in virtually Abelian groups,
//! with some factors fixed and the rest ranging over an `r`-ball, compared
//! with the bound `e^{c_1 |Ω_0|} c_2 (r n)^k`.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::GrowthError;

/// Group elements in normal form: an exponent vector for `ℤ^d`, or
/// `[k, e]` for `t^k s^e` in the infinite dihedral group.
pub type Element = Vec<i64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GrowthGroup {
    FreeAbelian(usize),
    /// `⟨t, s | s², (st)²⟩`, with Abelian normal subgroup `⟨t⟩` of index 2.
    InfiniteDihedral,
}

impl GrowthGroup {
    pub fn identity(&self) -> Element {
        match self {
            GrowthGroup::FreeAbelian(d) => vec![0; *d],
            GrowthGroup::InfiniteDihedral => vec![0, 0],
        }
    }

    pub fn mul(&self, x: &Element, y: &Element) -> Element {
        match self {
            GrowthGroup::FreeAbelian(_) => x.iter().zip(y).map(|(a, b)| a + b).collect(),
            GrowthGroup::InfiniteDihedral => {
                let sign = if x[1] == 0 { 1 } else { -1 };
                vec![x[0] + sign * y[0], x[1] ^ y[1]]
            }
        }
    }

    pub fn inverse(&self, x: &Element) -> Element {
        match self {
            GrowthGroup::FreeAbelian(_) => x.iter().map(|a| -a).collect(),
            GrowthGroup::InfiniteDihedral if x[1] == 0 => vec![-x[0], 0],
            GrowthGroup::InfiniteDihedral => x.clone(),
        }
    }

    /// The symmetric generating set `S ∪ F` defining the word metric.
    pub fn generators(&self) -> Vec<Element> {
        match self {
            GrowthGroup::FreeAbelian(d) => (0..*d)
                .flat_map(|i| {
                    [1, -1].map(|sign| {
                        let mut e = vec![0; *d];
                        e[i] = sign;
                        e
                    })
                })
                .collect(),
            GrowthGroup::InfiniteDihedral => vec![vec![1, 0], vec![-1, 0], vec![0, 1]],
        }
    }

    /// `B(r)` by breadth-first search in the Cayley graph.
    pub fn ball(&self, r: u64) -> Vec<Element> {
        let gens = self.generators();
        let mut seen: HashSet<Element> = HashSet::from([self.identity()]);
        let mut order = vec![self.identity()];
        let mut frontier = VecDeque::from([(self.identity(), 0u64)]);
        while let Some((x, dist)) = frontier.pop_front() {
            if dist == r {
                continue;
            }
            for g in &gens {
                let y = self.mul(&x, g);
                if seen.insert(y.clone()) {
                    order.push(y.clone());
                    frontier.push_back((y, dist + 1));
                }
            }
        }
        order.sort();
        order
    }

    /// Constants of the bound as chosen in the proof: `C` and `k` with
    /// `|B(m)| ≤ C m^k`, the conjugation set `E`, and `d` with `K ⊆ B(d)`.
    pub fn constants(&self) -> GrowthConstants {
        let (growth_c, order, conjugators) = match self {
            GrowthGroup::FreeAbelian(d) => (3f64.powi(*d as i32), *d as u32, vec![self.identity()]),
            GrowthGroup::InfiniteDihedral => (4.0, 1, vec![vec![0, 0], vec![0, 1]]),
        };
        let mut k_set = vec![self.identity()];
        for g in &conjugators {
            for x in self.generators() {
                k_set.push(self.mul(&self.mul(g, &x), &self.inverse(g)));
            }
        }
        let k_radius = (0..)
            .find(|&d| {
                let ball: HashSet<Element> = self.ball(d).into_iter().collect();
                k_set.iter().all(|x| ball.contains(x))
            })
            .expect("K is finite");
        let e_size = conjugators.len() as u64;
        GrowthConstants {
            growth_c,
            order,
            conjugators: e_size,
            k_radius,
            c1: (e_size as f64).ln(),
            c2: growth_c * (3.0 * k_radius as f64).powi(order as i32),
        }
    }

    pub fn parse_element(&self, s: &str) -> Result<Element, GrowthError> {
        let parts = s
            .split(',')
            .map(|t| t.trim().parse::<i64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| GrowthError::Parse(s.to_string()))?;
        let ok = match self {
            GrowthGroup::FreeAbelian(d) => parts.len() == *d,
            GrowthGroup::InfiniteDihedral => parts.len() == 2 && (parts[1] == 0 || parts[1] == 1),
        };
        ok.then_some(parts).ok_or_else(|| GrowthError::Parse(s.to_string()))
    }
}

impl fmt::Display for GrowthGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrowthGroup::FreeAbelian(d) => write!(f, "z^{d}"),
            GrowthGroup::InfiniteDihedral => f.write_str("dihedral"),
        }
    }
}

impl FromStr for GrowthGroup {
    type Err = GrowthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "z" => Ok(GrowthGroup::FreeAbelian(1)),
            "dihedral" => Ok(GrowthGroup::InfiniteDihedral),
            _ => s
                .strip_prefix("z^")
                .and_then(|d| d.parse().ok())
                .filter(|&d| d >= 1)
                .map(GrowthGroup::FreeAbelian)
                .ok_or_else(|| GrowthError::Parse(s.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthConstants {
    /// `C` with `|B(m)| ≤ C m^k` for `m ≥ 1`.
    pub growth_c: f64,
    /// `k`, the order of polynomial growth.
    pub order: u32,
    /// `|E|`.
    pub conjugators: u64,
    /// `d` with `K ⊆ B(d)`.
    pub k_radius: u64,
    pub c1: f64,
    pub c2: f64,
}

/// `n`, `r`, and the fixed factors `b_i` for `i ∈ Ω_0` (positions are 1-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrowthInstance {
    pub n: usize,
    pub r: u64,
    pub fixed: BTreeMap<usize, Element>,
}

impl GrowthInstance {
    pub fn new(n: usize, r: u64, fixed: BTreeMap<usize, Element>) -> Result<Self, GrowthError> {
        if let Some(&pos) = fixed.keys().find(|&&p| p == 0 || p > n) {
            return Err(GrowthError::BadPosition { pos, n });
        }
        Ok(GrowthInstance { n, r, fixed })
    }

    /// Parses `"2=5;4=1,0"`: position, then the element's coordinates.
    pub fn parse_fixed(group: &GrowthGroup, spec: &str) -> Result<BTreeMap<usize, Element>, GrowthError> {
        spec.split(';')
            .filter(|t| !t.trim().is_empty())
            .map(|entry| {
                let (pos, elem) = entry.split_once('=').ok_or_else(|| GrowthError::Parse(entry.to_string()))?;
                let pos = pos.trim().parse().map_err(|_| GrowthError::Parse(entry.to_string()))?;
                Ok((pos, group.parse_element(elem)?))
            })
            .collect()
    }
}

/// Above this many intermediate products the count is refused.
pub const HORIZON: usize = 5_000_000;

/// Exact number of distinct products, by iterated set products.
pub fn count_products(group: &GrowthGroup, inst: &GrowthInstance) -> Result<u64, GrowthError> {
    let ball = group.ball(inst.r);
    let mut current: HashSet<Element> = HashSet::from([group.identity()]);
    for i in 1..=inst.n {
        let choices: Vec<Element> = match inst.fixed.get(&i) {
            Some(b) => vec![b.clone()],
            None => ball.clone(),
        };
        if current.len().saturating_mul(choices.len()) > HORIZON {
            return Err(GrowthError::Horizon(format!("{} partial products at factor {i}", current.len())));
        }
        current = current.iter().flat_map(|x| choices.iter().map(move |b| group.mul(x, b))).collect();
    }
    Ok(current.len() as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub group: String,
    pub n: usize,
    pub r: u64,
    pub omega0: Vec<usize>,
    pub count: u64,
    /// `e^{c_1 |Ω_0|} c_2 (r n)^k`.
    pub lemma_bound: f64,
    /// `|E|^{|Ω_0|} C (((r+1)d + 1) n)^k`, the bound the proof establishes
    /// before simplifying; unlike the lemma's form it is positive at `r = 0`.
    pub proof_bound: f64,
    pub constants: GrowthConstants,
    pub pass: bool,
}

pub fn check_bound(group: &GrowthGroup, inst: &GrowthInstance) -> Result<GrowthReport, GrowthError> {
    let count = count_products(group, inst)?;
    let k = group.constants();
    let fixed = inst.fixed.len() as i32;
    let n = inst.n as f64;
    let lemma_bound = (k.c1 * fixed as f64).exp() * k.c2 * (inst.r as f64 * n).powi(k.order as i32);
    let radius = ((inst.r + 1) * k.k_radius + 1) as f64 * n;
    let proof_bound = (k.conjugators as f64).powi(fixed) * k.growth_c * radius.powi(k.order as i32);
    let lemma_ok = inst.r == 0 || count as f64 <= lemma_bound;
    let pass = lemma_ok && count as f64 <= proof_bound.max(1.0);
    Ok(GrowthReport {
        group: group.to_string(),
        n: inst.n,
        r: inst.r,
        omega0: inst.fixed.keys().copied().collect(),
        count,
        lemma_bound,
        proof_bound,
        constants: k,
        pass,
    })
}

fn pick_fixed(pool: &[Element], n: usize, mask: u64, rng: &mut ChaCha8Rng) -> BTreeMap<usize, Element> {
    (1..=n)
        .filter(|i| mask >> (i - 1) & 1 == 1)
        .map(|i| (i, pool[rng.gen_range(0..pool.len())].clone()))
        .collect()
}

/// Every `Ω_0 ⊆ {1..n}` for `1 ≤ n ≤ max_n`, `0 ≤ r ≤ max_r`; the fixed
/// factors are drawn from `B(3)` with `seed`.
pub fn exhaustive_sweep(group: &GrowthGroup, max_n: usize, max_r: u64, seed: u64) -> Result<Vec<GrowthReport>, GrowthError> {
    let pool = group.ball(3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for n in 1..=max_n {
        for r in 0..=max_r {
            for mask in 0..1u64 << n {
                let fixed = pick_fixed(&pool, n, mask, &mut rng);
                out.push(check_bound(group, &GrowthInstance::new(n, r, fixed)?)?);
            }
        }
    }
    Ok(out)
}

/// One random instance per seed, with `n`, `r` and `Ω_0` drawn uniformly.
pub fn random_sweep(
    group: &GrowthGroup,
    max_n: usize,
    max_r: u64,
    seeds: std::ops::Range<u64>,
) -> Result<Vec<GrowthReport>, GrowthError> {
    let pool = group.ball(3);
    seeds
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(1..=max_n);
            let r = rng.gen_range(0..=max_r);
            let mask = rng.gen_range(0..1u64 << n);
            let fixed = pick_fixed(&pool, n, mask, &mut rng);
            check_bound(group, &GrowthInstance::new(n, r, fixed)?)
        })
        .collect()
}

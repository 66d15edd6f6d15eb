//! Sparse fraction-free elimination over the integers.
//!
//! Vectors are sorted `(index, value)` lists without zeros. Every reduction
//! step is `a*v - b*w` followed by division by the content, so entries stay
//! integral and small. Pivots are always taken at the smallest index of a row,
//! which makes results depend only on the column order the caller chooses.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::algebra::Rational;

pub type SparseVec = Vec<(usize, BigInt)>;

fn content(parts: &[&SparseVec]) -> BigInt {
    let mut g = BigInt::zero();
    for part in parts {
        for (_, x) in part.iter() {
            g = g.gcd(x);
            if g.is_one() {
                return g;
            }
        }
    }
    g
}

fn divide(v: &mut SparseVec, g: &BigInt) {
    for (_, x) in v.iter_mut() {
        *x /= g;
    }
}

/// Divides by the content and makes the leading entry positive.
pub fn primitive(mut v: SparseVec) -> SparseVec {
    let g = content(&[&v]);
    if !g.is_zero() && !g.is_one() {
        divide(&mut v, &g);
    }
    if v.first().is_some_and(|(_, x)| x.is_negative()) {
        for (_, x) in v.iter_mut() {
            *x = -&*x;
        }
    }
    v
}

/// `a*v - b*w`.
pub fn combine(a: &BigInt, v: &SparseVec, b: &BigInt, w: &SparseVec) -> SparseVec {
    let mut out = Vec::with_capacity(v.len() + w.len());
    let (mut i, mut k) = (0, 0);
    while i < v.len() || k < w.len() {
        let take_v = k >= w.len() || (i < v.len() && v[i].0 < w[k].0);
        let take_w = i >= v.len() || (k < w.len() && w[k].0 < v[i].0);
        if take_v {
            let x = a * &v[i].1;
            if !x.is_zero() {
                out.push((v[i].0, x));
            }
            i += 1;
        } else if take_w {
            let x = -(b * &w[k].1);
            if !x.is_zero() {
                out.push((w[k].0, x));
            }
            k += 1;
        } else {
            let x = a * &v[i].1 - b * &w[k].1;
            if !x.is_zero() {
                out.push((v[i].0, x));
            }
            i += 1;
            k += 1;
        }
    }
    out
}

/// Clears denominators of a rational vector; the result spans the same line.
pub fn from_rationals<I: IntoIterator<Item = (usize, Rational)>>(entries: I) -> SparseVec {
    let mut map: BTreeMap<usize, Rational> = BTreeMap::new();
    for (i, c) in entries {
        *map.entry(i).or_insert_with(Rational::zero) += c;
    }
    map.retain(|_, c| !c.is_zero());
    let lcm = map
        .values()
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    map.into_iter()
        .map(|(i, c)| (i, (c * Rational::from_integer(lcm.clone())).to_integer()))
        .collect()
}

pub fn to_rationals(v: &SparseVec) -> Vec<(usize, Rational)> {
    v.iter()
        .map(|(i, x)| (*i, Rational::from_integer(x.clone())))
        .collect()
}

/// Row echelon form keyed by leading index.
#[derive(Clone, Debug, Default)]
pub struct Echelon {
    rows: BTreeMap<usize, SparseVec>,
}

impl Echelon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.keys().copied()
    }

    pub fn is_pivot(&self, idx: usize) -> bool {
        self.rows.contains_key(&idx)
    }

    /// Eliminates every entry of `v` that sits on a pivot column.
    pub fn reduce(&self, mut v: SparseVec) -> SparseVec {
        let mut cursor = 0;
        loop {
            let hit = v
                .iter()
                .find(|(i, _)| *i >= cursor && self.rows.contains_key(i))
                .map(|(i, x)| (*i, x.clone()));
            let Some((col, x)) = hit else {
                return v;
            };
            let row = &self.rows[&col];
            let lead = &row[0].1;
            let g = lead.gcd(&x);
            v = combine(&(lead / &g), &v, &(&x / &g), row);
            let c = content(&[&v]);
            if !c.is_zero() && !c.is_one() {
                divide(&mut v, &c);
            }
            cursor = col + 1;
        }
    }

    fn reduce_leading(&self, mut v: SparseVec) -> SparseVec {
        while let Some((col, x)) = v.first().cloned() {
            let Some(row) = self.rows.get(&col) else {
                break;
            };
            let lead = &row[0].1;
            let g = lead.gcd(&x);
            v = combine(&(lead / &g), &v, &(&x / &g), row);
            let c = content(&[&v]);
            if !c.is_zero() && !c.is_one() {
                divide(&mut v, &c);
            }
        }
        v
    }

    /// Adds `v` to the span; returns whether the rank grew.
    pub fn insert(&mut self, v: SparseVec) -> bool {
        let v = self.reduce_leading(v);
        match v.first() {
            None => false,
            Some((col, _)) => {
                let col = *col;
                self.rows.insert(col, primitive(v));
                true
            }
        }
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        self.reduce_leading(v.clone()).is_empty()
    }
}

/// Rank of a family of vectors.
pub fn rank<I: IntoIterator<Item = SparseVec>>(vectors: I) -> usize {
    let mut e = Echelon::new();
    for v in vectors {
        e.insert(v);
    }
    e.rank()
}

/// Linear relations among `images`, processed in the given order.
///
/// Returns one relation per dependent image `f`; the relation is supported on
/// indices `<= f` and has a positive coefficient at `f`. Together they form a
/// basis of the kernel of the map sending unit vector `f` to `images[f]`.
pub fn kernel<I: IntoIterator<Item = SparseVec>>(images: I) -> Vec<(usize, SparseVec)> {
    let mut rows: BTreeMap<usize, (SparseVec, SparseVec)> = BTreeMap::new();
    let mut out = Vec::new();
    for (f, img) in images.into_iter().enumerate() {
        let mut v = img;
        let mut combo: SparseVec = vec![(f, BigInt::one())];
        while let Some((col, x)) = v.first().cloned() {
            let Some((row, row_combo)) = rows.get(&col) else {
                break;
            };
            let lead = &row[0].1;
            let g = lead.gcd(&x);
            let (a, b) = (lead / &g, &x / &g);
            v = combine(&a, &v, &b, row);
            combo = combine(&a, &combo, &b, row_combo);
            let c = content(&[&v, &combo]);
            if !c.is_zero() && !c.is_one() {
                divide(&mut v, &c);
                divide(&mut combo, &c);
            }
        }
        match v.first() {
            None => {
                let mut rel = primitive(combo);
                // primitive() fixes the sign of the first entry; we want the
                // last one (index f) positive.
                if rel.last().is_some_and(|(_, x)| x.is_negative()) {
                    for (_, x) in rel.iter_mut() {
                        *x = -&*x;
                    }
                }
                out.push((f, rel));
            }
            Some((col, _)) => {
                let col = *col;
                rows.insert(col, (v, combo));
            }
        }
    }
    out
}

/// [`kernel`] for rational images. Each image is scaled to an integer vector
/// before elimination and the scaling is undone in the returned relations.
pub fn kernel_rational(
    images: Vec<Vec<(usize, Rational)>>,
) -> Vec<(usize, Vec<(usize, Rational)>)> {
    let mut scales = Vec::with_capacity(images.len());
    let mut scaled = Vec::with_capacity(images.len());
    for img in images {
        let lcm = img
            .iter()
            .fold(BigInt::one(), |acc, (_, c)| acc.lcm(c.denom()));
        let factor = Rational::from_integer(lcm);
        scaled.push(from_rationals(
            img.into_iter().map(|(i, c)| (i, c * &factor)),
        ));
        scales.push(factor);
    }
    kernel(scaled)
        .into_iter()
        .map(|(f, rel)| {
            let rel = rel
                .into_iter()
                .map(|(i, x)| (i, Rational::from_integer(x) * &scales[i]))
                .collect();
            (f, rel)
        })
        .collect()
}

/// Assigns dense indices to keys in first-seen order.
#[derive(Clone, Debug)]
pub struct Indexer<K: Ord + Clone> {
    index: BTreeMap<K, usize>,
    keys: Vec<K>,
}

impl<K: Ord + Clone> Default for Indexer<K> {
    fn default() -> Self {
        Indexer {
            index: BTreeMap::new(),
            keys: Vec::new(),
        }
    }
}

impl<K: Ord + Clone> Indexer<K> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Indexer whose order is exactly `keys`.
    pub fn from_keys<I: IntoIterator<Item = K>>(keys: I) -> Self {
        let mut ix = Self::new();
        for k in keys {
            ix.intern(k);
        }
        ix
    }

    pub fn intern(&mut self, k: K) -> usize {
        if let Some(i) = self.index.get(&k) {
            return *i;
        }
        let i = self.keys.len();
        self.index.insert(k.clone(), i);
        self.keys.push(k);
        i
    }

    pub fn get(&self, k: &K) -> Option<usize> {
        self.index.get(k).copied()
    }

    pub fn key(&self, i: usize) -> &K {
        &self.keys[i]
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(entries: &[(usize, i64)]) -> SparseVec {
        entries
            .iter()
            .map(|(i, x)| (*i, BigInt::from(*x)))
            .collect()
    }

    #[test]
    fn rank_and_membership() {
        let mut e = Echelon::new();
        assert!(e.insert(v(&[(0, 2), (1, 4)])));
        assert!(e.insert(v(&[(1, 3), (2, 1)])));
        assert!(!e.insert(v(&[(0, 1), (1, 5), (2, 1)])));
        assert_eq!(e.rank(), 2);
        assert!(e.contains(&v(&[(0, 1), (1, 2)])));
        assert!(!e.contains(&v(&[(2, 1)])));
        assert_eq!(e.pivots().collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn full_reduction_leaves_free_columns() {
        let mut e = Echelon::new();
        e.insert(v(&[(0, 1), (2, 1)]));
        e.insert(v(&[(1, 1), (2, -1)]));
        let r = e.reduce(v(&[(0, 1), (1, 1)]));
        assert!(r.is_empty());
        let r = e.reduce(v(&[(0, 3), (3, 1)]));
        assert_eq!(r, v(&[(2, -3), (3, 1)]));
    }

    #[test]
    fn kernel_is_filtered() {
        // images: e0, 2 e0, e1, e0 + e1
        let k = kernel(vec![
            v(&[(0, 1)]),
            v(&[(0, 2)]),
            v(&[(1, 1)]),
            v(&[(0, 1), (1, 1)]),
        ]);
        assert_eq!(k.len(), 2);
        assert_eq!(k[0], (1, v(&[(0, -2), (1, 1)])));
        assert_eq!(k[1], (3, v(&[(0, -1), (2, -1), (3, 1)])));
    }

    #[test]
    fn rational_denominators_cleared() {
        let r = from_rationals(vec![
            (0, Rational::new(1.into(), 2.into())),
            (3, Rational::new((-2).into(), 3.into())),
        ]);
        assert_eq!(r, v(&[(0, 3), (3, -4)]));
        assert_eq!(
            rank(vec![
                r.clone(),
                combine(&BigInt::from(2), &r, &BigInt::zero(), &r)
            ]),
            1
        );
    }
}

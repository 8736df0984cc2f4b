//! VAT reordering and ordered dissimilarity image rendering.
//!
//! The ordering starts at an endpoint of the most distant pair and then
//! repeatedly appends the unordered point closest to the ordered set. This is
//! the vertex-addition order of Prim's algorithm on the complete graph, and
//! `link_dist[i]` is the MST edge that attached `order[i]`.
//!
//! Ties: the lexicographically smallest `(i, j)` among maximum pairs is used
//! and the walk starts at `i`; among equally near candidates the smallest index
//! wins.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::OdImage;
use crate::matrix::{DissimilarityMatrix, Permutation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VatOrdering {
    pub order: Permutation,
    pub link_dist: Vec<f64>,
}

impl VatOrdering {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Total weight of the minimum spanning tree.
    pub fn mst_weight(&self) -> f64 {
        self.link_dist.iter().sum()
    }
}

/// First endpoint of the lexicographically smallest maximum-distance pair.
fn furthest_pair_start(m: &DissimilarityMatrix) -> usize {
    let n = m.n();
    let mut best = f64::NEG_INFINITY;
    let mut start = 0;
    for i in 0..n {
        for &v in &m.row(i)[i + 1..] {
            if v > best {
                best = v;
                start = i;
            }
        }
    }
    start
}

pub fn vat_order(m: &DissimilarityMatrix) -> VatOrdering {
    let n = m.n();
    let start = furthest_pair_start(m);
    let mut order = Vec::with_capacity(n);
    let mut link_dist = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    // nearest distance from each unplaced point to the ordered set
    let mut reach = m.row(start).to_vec();
    placed[start] = true;
    order.push(start);
    link_dist.push(0.0);

    for _ in 1..n {
        let mut next = usize::MAX;
        let mut best = f64::INFINITY;
        for (j, &r) in reach.iter().enumerate() {
            if !placed[j] && (r < best || next == usize::MAX) {
                best = r;
                next = j;
            }
        }
        placed[next] = true;
        order.push(next);
        link_dist.push(best);
        for (r, &v) in reach.iter_mut().zip(m.row(next)) {
            if v < *r {
                *r = v;
            }
        }
    }

    VatOrdering {
        order: Permutation::new(order).expect("Prim visits every vertex once"),
        link_dist,
    }
}

/// Quantizes `v / dmax` to 8 bits, rounding half away from zero.
#[inline]
pub fn quantize(v: f64, dmax: f64) -> u8 {
    if dmax > 0.0 {
        (255.0 * v / dmax).round().clamp(0.0, 255.0) as u8
    } else {
        0
    }
}

/// Renders the matrix in `ordering` as an 8-bit image scaled by its maximum entry.
pub fn odi_from(m: &DissimilarityMatrix, ordering: &VatOrdering) -> Result<OdImage> {
    let n = m.n();
    if ordering.len() != n {
        return Err(Error::shape(
            format!("ordering of length {n}"),
            format!("length {}", ordering.len()),
        ));
    }
    let dmax = m.max();
    let p = ordering.order.as_slice();
    let mut pixels = vec![0u8; n * n];
    pixels.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let src = m.row(p[i]);
        for (out, &pj) in row.iter_mut().zip(p) {
            *out = quantize(src[pj], dmax);
        }
    });
    OdImage::new(n, pixels)
}

/// VAT ordering and its image in one call.
pub fn vat(m: &DissimilarityMatrix) -> Result<(VatOrdering, OdImage)> {
    let ordering = vat_order(m);
    let image = odi_from(m, &ordering)?;
    Ok((ordering, image))
}

//! Counting answers of a connected tree query by dynamic programming over
//! the colors.

use std::ops::{Add, Mul};

use num_traits::{One, Zero};

use crate::analysis::gyo::is_subset;
use crate::analysis::VariableOrder;
use crate::engine::OpCounter;
use crate::index::ColorIndex;

/// Scalars the counting recurrence can run in.
pub trait CountScalar: Clone + Zero + One + Add<Output = Self> + Mul<Output = Self> + From<u32> {}

impl<N> CountScalar for N where N: Clone + Zero + One + Add<Output = N> + Mul<Output = N> + From<u32> {}

fn label_ok(idx: &ColorIndex, order: &VariableOrder, c: u32, x: usize) -> bool {
    is_subset(&order.labels[x], idx.color_labels(c))
}

/// Number of answers of a connected query whose free variables are the
/// first `num_free` entries of `order`; 0 or 1 if it has none.
pub fn count_component<N: CountScalar>(
    idx: &ColorIndex,
    order: &VariableOrder,
    free: &[bool],
    ops: &OpCounter,
) -> N {
    let k = idx.num_colors() as u32;
    let n = order.order.len();
    // existence of an extension for quantified subtrees
    let mut exists: Vec<Vec<bool>> = vec![Vec::new(); n];
    let mut down: Vec<Vec<N>> = vec![Vec::new(); n];
    for &x in order.order.iter().rev() {
        if free[x] {
            continue;
        }
        exists[x] = (0..k)
            .map(|c| {
                ops.add(1);
                label_ok(idx, order, c, x)
                    && order.children[x].iter().all(|&z| {
                        idx.deg_row(c).iter().any(|&(c2, _)| {
                            ops.add(1);
                            exists[z][c2 as usize]
                        })
                    })
            })
            .collect();
    }
    let root = order.root();
    if !free[root] {
        let sat = exists[root].iter().any(|&b| b);
        return if sat { N::one() } else { N::zero() };
    }
    for &x in order.order.iter().rev() {
        if !free[x] {
            continue;
        }
        let mut row = Vec::with_capacity(k as usize);
        for c in 0..k {
            ops.add(1);
            let sat = label_ok(idx, order, c, x)
                && order.children[x].iter().filter(|&&z| !free[z]).all(|&z| {
                    idx.deg_row(c).iter().any(|&(c2, _)| {
                        ops.add(1);
                        exists[z][c2 as usize]
                    })
                });
            if !sat {
                row.push(N::zero());
                continue;
            }
            let mut prod = N::one();
            for &y in order.children[x].iter().filter(|&&y| free[y]) {
                let mut sum = N::zero();
                for &(c2, m) in idx.deg_row(c) {
                    ops.add(1);
                    let f = &down[y][c2 as usize];
                    if !f.is_zero() {
                        sum = sum + f.clone() * N::from(m);
                    }
                }
                prod = prod * sum;
                if prod.is_zero() {
                    break;
                }
            }
            row.push(prod);
        }
        down[x] = row;
    }
    let mut total = N::zero();
    for c in 0..k {
        ops.add(1);
        let f = &down[root][c as usize];
        if !f.is_zero() {
            total = total + f.clone() * N::from(idx.class_size(c) as u32);
        }
    }
    total
}

//! minNeighbors-style rectangle grouping.
//!
//! Two rects are similar iff each of `x`, `y`, `w`, `h` differs by at most
//! `eps * m`, with `m = (min(w1, w2) + min(h1, h2)) / 2`. The transitive
//! closure of that predicate partitions the candidates into classes; a
//! class survives when its member count reaches `max(1, min_neighbors)`
//! (so `min_neighbors = 0` keeps every class) and is reported as its
//! member-wise mean rect, each coordinate rounded half up. Output is
//! sorted by `(y, x, w, h)`.

use super::Detection;
use crate::raster::Rect;

fn similar(a: Rect, b: Rect, eps: f64) -> bool {
    let m = (f64::from(a.w.min(b.w)) + f64::from(a.h.min(b.h))) / 2.0;
    let tol = eps * m;
    let close = |p: u32, q: u32| f64::from(p.abs_diff(q)) <= tol;
    close(a.x, b.x) && close(a.y, b.y) && close(a.w, b.w) && close(a.h, b.h)
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let ra = find(parent, a);
    let rb = find(parent, b);
    if ra != rb {
        parent[ra.max(rb)] = ra.min(rb);
    }
}

/// Integer mean with round-half-up: `floor(sum/n + 1/2)`.
fn mean_half_up(sum: u64, n: u64) -> u32 {
    ((2 * sum + n) / (2 * n)) as u32
}

/// Groups raw candidate windows into detections. See the module docs for
/// the exact similarity and keep rules.
pub fn group_rects(candidates: &[Rect], min_neighbors: u32, eps: f64) -> Vec<Detection> {
    let n = candidates.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if similar(candidates[i], candidates[j], eps) {
                union(&mut parent, i, j);
            }
        }
    }

    // accumulate per class: count and coordinate sums
    let mut classes: std::collections::HashMap<usize, (u64, [u64; 4])> =
        std::collections::HashMap::new();
    for (i, &r) in candidates.iter().enumerate() {
        let root = find(&mut parent, i);
        let entry = classes.entry(root).or_insert((0, [0; 4]));
        entry.0 += 1;
        entry.1[0] += u64::from(r.x);
        entry.1[1] += u64::from(r.y);
        entry.1[2] += u64::from(r.w);
        entry.1[3] += u64::from(r.h);
    }

    let keep = u64::from(min_neighbors.max(1));
    let mut out: Vec<Detection> = classes
        .values()
        .filter(|(count, _)| *count >= keep)
        .map(|(count, sums)| Detection {
            rect: Rect::new(
                mean_half_up(sums[0], *count),
                mean_half_up(sums[1], *count),
                mean_half_up(sums[2], *count),
                mean_half_up(sums[3], *count),
            ),
            neighbors: *count as u32,
        })
        .collect();
    out.sort_unstable_by_key(|d| (d.rect.y, d.rect.x, d.rect.w, d.rect.h, d.neighbors));
    out
}

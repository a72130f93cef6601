//! Deterministic k-means.
//!
//! Callers pass points already sorted into a canonical order. The first
//! center is the first point; each further center is the point farthest
//! from the centers chosen so far (lowest index on ties). Lloyd iterations
//! then run until assignments stop changing.

pub(crate) trait ClusterPoint: Clone {
    fn dist2(&self, other: &Self) -> f64;
    fn centroid(members: &[&Self]) -> Self;
}

#[derive(Debug, Clone)]
pub(crate) struct Cluster<P> {
    pub center: P,
    pub members: Vec<usize>,
}

pub(crate) fn kmeans<P: ClusterPoint>(points: &[P], k: usize, max_iter: usize) -> Vec<Cluster<P>> {
    if points.is_empty() || k == 0 {
        return Vec::new();
    }
    let mut centers: Vec<P> = vec![points[0].clone()];
    let mut nearest: Vec<f64> = points.iter().map(|p| p.dist2(&points[0])).collect();
    while centers.len() < k {
        let (idx, &d) = nearest
            .iter()
            .enumerate()
            .fold(None, |best: Option<(usize, &f64)>, (i, d)| match best {
                Some((_, bd)) if *d <= *bd => best,
                _ => Some((i, d)),
            })
            .expect("points is non-empty");
        if d <= 0.0 {
            break;
        }
        centers.push(points[idx].clone());
        for (i, p) in points.iter().enumerate() {
            nearest[i] = nearest[i].min(p.dist2(&points[idx]));
        }
    }

    let mut assignment = vec![usize::MAX; points.len()];
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = p.dist2(center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        // Recompute centers, dropping any that lost all members.
        let mut next = Vec::with_capacity(centers.len());
        let mut remap = vec![usize::MAX; centers.len()];
        for c in 0..centers.len() {
            let members: Vec<&P> = points.iter().zip(&assignment).filter(|(_, &a)| a == c).map(|(p, _)| p).collect();
            if !members.is_empty() {
                remap[c] = next.len();
                next.push(P::centroid(&members));
            }
        }
        for a in assignment.iter_mut() {
            *a = remap[*a];
        }
        centers = next;
    }

    let mut clusters: Vec<Cluster<P>> = centers.into_iter().map(|center| Cluster { center, members: Vec::new() }).collect();
    for (i, &a) in assignment.iter().enumerate() {
        clusters[a].members.push(i);
    }
    clusters.retain(|c| !c.members.is_empty());
    // Centers of the final assignment.
    for c in clusters.iter_mut() {
        let members: Vec<&P> = c.members.iter().map(|&i| &points[i]).collect();
        c.center = P::centroid(&members);
    }
    clusters
}

impl ClusterPoint for [f64; 4] {
    fn dist2(&self, other: &Self) -> f64 {
        self.iter().zip(other).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    fn centroid(members: &[&Self]) -> Self {
        let mut out = [0.0; 4];
        for m in members {
            for (o, v) in out.iter_mut().zip(m.iter()) {
                *o += v;
            }
        }
        out.map(|v| v / members.len() as f64)
    }
}

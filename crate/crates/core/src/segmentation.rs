//! Transfer of the six-way component partition to unlabeled clouds, and
//! per-component resampling to exact budgets.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{ComponentId, NearestNeighborIndex, Neighbor, PointCloud};
use crate::templates::ComponentBudget;

/// Neighbor count of the default classifier.
pub const DEFAULT_K: usize = 3;

/// A labeled cloud covering all six components, with its search index.
#[derive(Debug, Clone)]
pub struct LabeledReference {
    cloud: PointCloud,
    index: NearestNeighborIndex,
}

impl LabeledReference {
    pub fn new(cloud: PointCloud) -> Result<Self> {
        cloud.require_non_empty()?;
        let counts = cloud.require_labels().map(|_| cloud.component_counts())?;
        if let Some(c) = ComponentId::ALL.into_iter().find(|c| counts[c.index()] == 0) {
            return Err(Error::MissingComponent(c));
        }
        let index = NearestNeighborIndex::build(cloud.points())?;
        Ok(LabeledReference { cloud, index })
    }

    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }

    pub fn index(&self) -> &NearestNeighborIndex {
        &self.index
    }

    fn labels(&self) -> &[ComponentId] {
        self.cloud.labels().expect("validated")
    }
}

/// Majority label among `neighbors` (sorted nearest first). A tie goes to the
/// tied label that occurs earliest in the list, i.e. the nearest neighbor's
/// label whenever it is part of the tie.
pub(crate) fn vote(neighbors: &[Neighbor], labels: &[ComponentId]) -> ComponentId {
    let mut counts = [0usize; 6];
    for n in neighbors {
        counts[labels[n.index].index()] += 1;
    }
    let best = counts.iter().copied().max().unwrap_or(0);
    neighbors
        .iter()
        .map(|n| labels[n.index])
        .find(|c| counts[c.index()] == best)
        .expect("at least one neighbor")
}

/// Labels every query point by a k-nearest-neighbor vote over the reference.
/// A query point that coincides with a reference point takes its label.
pub fn knn_transfer(query: &PointCloud, reference: &LabeledReference, k: usize) -> Result<PointCloud> {
    query.require_non_empty()?;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let ref_labels = reference.labels();
    let labels: Vec<ComponentId> = query
        .points()
        .par_iter()
        .map(|q| {
            let neighbors = reference.index.k_nearest(q, k);
            if neighbors[0].distance == 0.0 {
                ref_labels[neighbors[0].index]
            } else {
                vote(&neighbors, ref_labels)
            }
        })
        .collect();
    Ok(PointCloud::from_parts_unchecked(query.points().to_vec(), Some(labels)))
}

/// Draws exactly `budget[c]` points of every budgeted component `c`, in
/// component order. Components absent from the budget are dropped.
///
/// When the budget is at most the available count the points are a uniform
/// subsample without replacement (in random order). Otherwise every source
/// point is kept once and the remainder is drawn with replacement.
pub fn resample_components(cloud: &PointCloud, budget: &ComponentBudget, seed: u64) -> Result<PointCloud> {
    cloud.require_labels()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = Vec::with_capacity(budget.total());
    for (c, count) in budget.iter() {
        let source = cloud.component_indices(c);
        if source.is_empty() {
            return Err(Error::MissingComponent(c));
        }
        if count <= source.len() {
            picked.extend(index::sample(&mut rng, source.len(), count).into_iter().map(|i| source[i]));
        } else {
            let mut chosen = source.clone();
            chosen.extend((source.len()..count).map(|_| source[rng.random_range(0..source.len())]));
            chosen.shuffle(&mut rng);
            picked.extend(chosen);
        }
    }
    Ok(cloud.select(&picked))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point3, RigidTransform, Vector3};
    use crate::templates::{SyntheticHand, SyntheticHandSpec};
    use rand_distr::{Distribution, Normal};
    use ComponentId::*;

    fn hand_reference(n: usize) -> LabeledReference {
        let hand = SyntheticHand::new(SyntheticHandSpec::default()).unwrap();
        let cloud = crate::templates::sample_mesh_surface(&hand.mesh(), n, 11).unwrap();
        LabeledReference::new(cloud).unwrap()
    }

    /// Brute-force classifier: sort all reference points by (distance, index).
    fn brute_force(q: &Point3, reference: &PointCloud, k: usize) -> ComponentId {
        let mut all: Vec<Neighbor> = reference
            .points()
            .iter()
            .enumerate()
            .map(|(i, p)| Neighbor { index: i, distance: (p - q).norm() })
            .collect();
        all.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.index.cmp(&b.index)));
        all.truncate(k);
        if all[0].distance == 0.0 {
            return reference.labels().unwrap()[all[0].index];
        }
        vote(&all, reference.labels().unwrap())
    }

    #[test]
    fn majority_and_tie_break() {
        let labels = [Thumb, Palm, Thumb, Index, Index];
        let n = |index, distance| Neighbor { index, distance };
        assert_eq!(vote(&[n(1, 1.0), n(0, 2.0), n(2, 3.0)], &labels), Thumb);
        // Three-way tie: nearest label wins.
        assert_eq!(vote(&[n(3, 1.0), n(1, 2.0), n(0, 3.0)], &labels), Index);
        // Nearest not part of the tie: earliest tied label wins.
        assert_eq!(vote(&[n(1, 1.0), n(3, 2.0), n(0, 3.0), n(4, 4.0), n(2, 5.0)], &labels), Index);
    }

    #[test]
    fn identity_transfer_is_exact() {
        let reference = hand_reference(3000);
        let mut query = reference.cloud().clone();
        query.clear_labels();
        let out = knn_transfer(&query, &reference, 3).unwrap();
        assert_eq!(out.labels(), reference.cloud().labels());
        assert_eq!(out.points(), reference.cloud().points());
    }

    #[test]
    fn matches_brute_force_classifier() {
        let reference = hand_reference(800);
        let query = PointCloud::new((0..300).map(|i| {
            let t = i as f64;
            Point3::new(-60.0 + 0.6 * t, 60.0 * (0.1 * t).sin(), 15.0 * (0.37 * t).cos())
        }).collect()).unwrap();
        for k in [1, 3, 4, 7] {
            let out = knn_transfer(&query, &reference, k).unwrap();
            for (q, &l) in query.points().iter().zip(out.labels().unwrap()) {
                assert_eq!(l, brute_force(q, reference.cloud(), k));
            }
        }
    }

    #[test]
    fn robust_to_millimeter_noise() {
        let reference = hand_reference(5000);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let query = PointCloud::new(
            reference
                .cloud()
                .points()
                .iter()
                .map(|p| p + Vector3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng)))
                .collect(),
        )
        .unwrap();
        let out = knn_transfer(&query, &reference, 3).unwrap();
        let agree = out.labels().unwrap().iter().zip(reference.cloud().labels().unwrap()).filter(|(a, b)| a == b).count();
        assert!(agree as f64 / 5000.0 >= 0.95, "agreement {agree}/5000");
    }

    #[test]
    fn invariant_under_shared_rigid_motion() {
        let reference = hand_reference(1500);
        let query = PointCloud::new((0..200).map(|i| Point3::new(i as f64 * 0.7 - 40.0, (i % 13) as f64 * 3.0 - 20.0, 2.0)).collect()).unwrap();
        let before = knn_transfer(&query, &reference, 3).unwrap();
        let t = RigidTransform::from_axis_angle(Vector3::new(0.3, -1.0, 0.5), 0.9).compose(&RigidTransform::from_translation(Vector3::new(5.0, 1.0, -7.0)));
        let moved_ref = LabeledReference::new(reference.cloud().transform(&t)).unwrap();
        let after = knn_transfer(&query.transform(&t), &moved_ref, 3).unwrap();
        assert_eq!(before.labels(), after.labels());
    }

    #[test]
    fn reference_must_cover_all_components() {
        let cloud = PointCloud::with_labels(vec![Point3::origin()], vec![Palm]).unwrap();
        assert!(matches!(LabeledReference::new(cloud), Err(Error::MissingComponent(Thumb))));
        let reference = hand_reference(100);
        assert!(knn_transfer(&PointCloud::new(vec![]).unwrap(), &reference, 3).is_err());
    }

    fn ten_palm_five_thumb() -> PointCloud {
        let points = (0..15).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        let labels = (0..15).map(|i| if i < 10 { Palm } else { Thumb }).collect();
        PointCloud::with_labels(points, labels).unwrap()
    }

    #[test]
    fn resample_exact_counts() {
        let cloud = ten_palm_five_thumb();
        let same = resample_components(&cloud, &ComponentBudget::new([(Palm, 10), (Thumb, 5)]).unwrap(), 1).unwrap();
        let mut xs: Vec<f64> = same.points().iter().map(|p| p.x).collect();
        xs.sort_by(f64::total_cmp);
        assert_eq!(xs, (0..15).map(f64::from).collect::<Vec<_>>());

        let four = resample_components(&cloud, &ComponentBudget::new([(Palm, 4)]).unwrap(), 2).unwrap();
        assert_eq!(four.len(), 4);
        assert!(four.points().iter().all(|p| p.x < 10.0));

        let up = resample_components(&cloud, &ComponentBudget::new([(Thumb, 12)]).unwrap(), 3).unwrap();
        assert_eq!(up.component_counts(), [0, 12, 0, 0, 0, 0]);
        assert!(up.points().iter().all(|p| p.x >= 10.0));

        assert!(matches!(
            resample_components(&cloud, &ComponentBudget::new([(Ring, 1)]).unwrap(), 0),
            Err(Error::MissingComponent(Ring))
        ));
    }

    #[test]
    fn subsample_is_uniform() {
        let cloud = ten_palm_five_thumb();
        let budget = ComponentBudget::new([(Palm, 4)]).unwrap();
        let trials = 10_000;
        let mut hits = [0usize; 10];
        for seed in 0..trials {
            for p in resample_components(&cloud, &budget, seed).unwrap().points() {
                hits[p.x as usize] += 1;
            }
        }
        let sigma = (trials as f64 * 0.4 * 0.6).sqrt();
        for h in hits {
            assert!((h as f64 - 4000.0).abs() <= 3.0 * sigma, "{hits:?}");
        }
    }
}

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::io::{read_trajectory_csv, RawPoints};
use crate::rng::stream;
use crate::trajectory::Provenance;
use crate::trajectory::{
    discretize, Cell, GridSpec, ReachabilityGraph, TargetPatternSet, Trajectory, TrajectoryDataset,
};

/// Outcome of [`load_dataset`].
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: TrajectoryDataset,
    /// Trajectories dropped because a step broke reachability.
    pub excluded: usize,
    /// Trajectories dropped by the sample cap.
    pub sampled_out: usize,
}

/// Reads a trajectory CSV, discretizes lat/lon input, drops trajectories
/// that break `reach`, and keeps a seeded sample of at most `sample_cap`.
pub fn load_dataset(
    path: &Path,
    spec: &GridSpec,
    reach: &ReachabilityGraph,
    sample_cap: Option<usize>,
    seed: u64,
) -> Result<LoadedDataset> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let raw = read_trajectory_csv(std::io::BufReader::new(file))?;
    let mut kept = Vec::with_capacity(raw.len());
    let mut excluded = 0;
    for r in raw {
        let traj = match &r.points {
            RawPoints::LatLon(pts) => discretize(pts, spec)
                .map_err(|e| Error::Data(format!("trajectory {}: {e}", r.id)))?,
            RawPoints::Cells(cells) => {
                for &c in cells {
                    spec.check(c)
                        .map_err(|e| Error::Data(format!("trajectory {}: {e}", r.id)))?;
                }
                Trajectory::new(cells.clone())
            }
        };
        if traj.is_empty() || !reach.is_valid(traj.cells()) {
            excluded += 1;
        } else {
            kept.push(traj);
        }
    }
    if kept.is_empty() {
        return Err(Error::Data(format!(
            "no usable trajectories in {} ({excluded} excluded)",
            path.display()
        )));
    }
    let mut sampled_out = 0;
    if let Some(cap) = sample_cap {
        if kept.len() > cap {
            let mut rng = stream(seed, "sample-cap", 0);
            let mut pick = index::sample(&mut rng, kept.len(), cap).into_vec();
            pick.sort_unstable();
            sampled_out = kept.len() - cap;
            kept = pick.into_iter().map(|i| kept[i].clone()).collect();
        }
    }
    Ok(LoadedDataset {
        dataset: TrajectoryDataset::new(kept, Provenance::Real),
        excluded,
        sampled_out,
    })
}

/// Seeded random walks over 8-neighbor moves, lengths uniform in
/// `[min_len, max_len]`.
pub fn generate_synthetic(
    spec: &GridSpec,
    n: usize,
    min_len: usize,
    max_len: usize,
    seed: u64,
) -> Result<TrajectoryDataset> {
    if n == 0 {
        return Err(Error::Argument("synthetic dataset needs n >= 1".into()));
    }
    if min_len == 0 || min_len > max_len {
        return Err(Error::Argument(format!(
            "bad length bounds [{min_len}, {max_len}]"
        )));
    }
    let reach = ReachabilityGraph::build(spec, &crate::trajectory::ReachMode::Neighbors8, false)?;
    let d = spec.domain_size() as u32;
    let trajs = (0..n)
        .map(|i| {
            let mut rng = stream(seed, "synth-walk", i as u64);
            let len = rng.random_range(min_len..=max_len);
            let mut cur = Cell(rng.random_range(0..d));
            let mut cells = vec![cur];
            while cells.len() < len {
                let next = reach.next(cur);
                if next.is_empty() {
                    break;
                }
                cur = next[rng.random_range(0..next.len())];
                cells.push(cur);
            }
            Trajectory::new(cells)
        })
        .collect();
    Ok(TrajectoryDataset::new(trajs, Provenance::Real))
}

/// Picks `per_length` distinct patterns of each length in
/// `[k_min, k_max]` from the dataset's windows; each scores its length.
pub fn sample_target_patterns(
    dataset: &TrajectoryDataset,
    k_min: usize,
    k_max: usize,
    per_length: usize,
    seed: u64,
) -> Result<TargetPatternSet> {
    if k_min == 0 || k_min > k_max {
        return Err(Error::Config(format!(
            "bad pattern lengths [{k_min}, {k_max}]"
        )));
    }
    if per_length == 0 {
        return Err(Error::Config("per_length must be at least 1".into()));
    }
    let mut chosen = Vec::new();
    for k in k_min..=k_max {
        let distinct: Vec<&[Cell]> = dataset
            .iter()
            .flat_map(|t| t.cells().windows(k))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if distinct.len() < per_length {
            return Err(Error::Config(format!(
                "only {} distinct patterns of length {k}, {per_length} requested",
                distinct.len()
            )));
        }
        let mut rng = stream(seed, "patterns", k as u64);
        let mut pick = index::sample(&mut rng, distinct.len(), per_length).into_vec();
        pick.sort_unstable();
        chosen.extend(
            pick.into_iter()
                .map(|i| Trajectory::new(distinct[i].to_vec())),
        );
    }
    TargetPatternSet::with_length_scores(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{count_pattern, ReachMode};
    use std::io::Write;

    #[test]
    fn synthetic_walks_are_valid() {
        let g = GridSpec::square(16, 16).unwrap();
        let r = ReachabilityGraph::build(&g, &ReachMode::Neighbors8, false).unwrap();
        let d = generate_synthetic(&g, 200, 2, 10, 1).unwrap();
        assert_eq!(d.len(), 200);
        assert!(d
            .iter()
            .all(|t| r.is_valid(t.cells()) && (2..=10).contains(&t.len())));
        assert_eq!(d, generate_synthetic(&g, 200, 2, 10, 1).unwrap());
        let one = generate_synthetic(&g, 1, 3, 3, 9).unwrap();
        assert_eq!(one.trajectories[0].len(), 3);
    }

    #[test]
    fn sampled_patterns_occur() {
        let g = GridSpec::square(16, 16).unwrap();
        let d = generate_synthetic(&g, 300, 2, 10, 2).unwrap();
        let tp = sample_target_patterns(&d, 1, 6, 5, 3).unwrap();
        assert_eq!(tp.len(), 30);
        for t in tp.patterns() {
            assert_eq!(t.score, t.pattern.len() as f64);
            let n: usize = d
                .iter()
                .map(|x| count_pattern(t.pattern.cells(), x.cells()))
                .sum();
            assert!(n >= 1);
        }
        assert_eq!(tp, sample_target_patterns(&d, 1, 6, 5, 3).unwrap());
        let singles = sample_target_patterns(&d, 1, 1, 5, 4).unwrap();
        assert_eq!((singles.len(), singles.k_max()), (5, 1));
    }

    #[test]
    fn too_few_patterns_names_length() {
        let d = TrajectoryDataset::new(vec![Trajectory::from_ids([1, 2])], Provenance::Real);
        let err = sample_target_patterns(&d, 1, 2, 2, 0).unwrap_err();
        assert!(err.to_string().contains("length 2"), "{err}");
    }

    #[test]
    fn load_filters_and_caps() {
        let g = GridSpec::square(4, 4).unwrap();
        let r = ReachabilityGraph::build(&g, &ReachMode::Neighbors8, false).unwrap();
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "traj_id,step,cell").unwrap();
        for i in 0..10 {
            writeln!(f, "t{i},0,0\nt{i},1,1").unwrap();
        }
        writeln!(f, "bad,0,0\nbad,1,15").unwrap();
        f.flush().unwrap();
        let out = load_dataset(f.path(), &g, &r, Some(5), 1).unwrap();
        assert_eq!(
            (out.dataset.len(), out.excluded, out.sampled_out),
            (5, 1, 5)
        );
    }
}

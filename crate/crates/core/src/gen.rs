//! Seeded stream generators for experiments and property suites. Sizes and
//! weights are drawn as powers of two (2^U with U uniform), releases as a
//! sorted integer sample, matching the harness conventions.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dynamic::DynamicMenu;
use crate::model::{Job, JobStream, OnlineMechanism};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy)]
pub struct RandomStreamParams {
    pub n: usize,
    /// Sizes are 2^U, U uniform in 0..=max_p_exp.
    pub max_p_exp: u32,
    /// Weights are 2^U, U uniform in 0..=max_w_exp.
    pub max_w_exp: u32,
    /// Releases are a sorted uniform sample from 0..=max_release.
    pub max_release: u64,
}

pub fn random_stream(rng: &mut ChaCha8Rng, params: &RandomStreamParams) -> JobStream {
    let mut releases: Vec<u64> = (0..params.n)
        .map(|_| rng.gen_range(0..=params.max_release))
        .collect();
    releases.sort_unstable();
    let triples: Vec<(u64, u128, u64)> = releases
        .into_iter()
        .map(|r| {
            let p = 1u64 << rng.gen_range(0..=params.max_p_exp);
            let w = 1u128 << rng.gen_range(0..=params.max_w_exp);
            (r, w, p)
        })
        .collect();
    JobStream::from_triples(&triples).expect("sorted releases form a valid stream")
}

/// Unit-weight stream that never creates a gap in the dynamic mechanism's
/// state: each release is clamped to the end of the tentative sequence the
/// mechanism would hold at that point. The clamping is adaptive, so the
/// stream depends on the machine count it is generated for.
pub fn gap_free_unit_stream(
    rng: &mut ChaCha8Rng,
    n: usize,
    max_p_exp: u32,
    max_release_step: u64,
    machines: u32,
) -> JobStream {
    let mut mech = DynamicMenu::new(machines);
    let mut jobs: Vec<Job> = Vec::new();
    let mut release = 0u64;
    for i in 0..n {
        let p = 1u64 << rng.gen_range(0..=max_p_exp);
        let step = rng.gen_range(0..=max_release_step);
        release = (release + step).min(mech.tentative_end()).max(release);
        let job = Job::new(i as u32 + 1, release, 1, p);
        mech.serve(&job).expect("generator stream is well-formed");
        jobs.push(job);
    }
    JobStream::new(jobs).expect("releases are non-decreasing by construction")
}

/// The introduction instance: one job of length `l`, then ceil(sqrt(l)) unit
/// jobs, all released at time zero.
pub fn intro_lengths(l: u64) -> JobStream {
    let tail = (l as f64).sqrt().ceil() as u64;
    let mut triples = vec![(0u64, 1u128, l)];
    triples.extend(std::iter::repeat_n((0, 1, 1), tail as usize));
    JobStream::from_triples(&triples).unwrap()
}

/// The weighted introduction instance: `l` unit jobs of weight one, then a
/// single unit job of weight `w`.
pub fn intro_weighted(l: u64, w: u128) -> JobStream {
    let mut triples: Vec<(u64, u128, u64)> = std::iter::repeat_n((0u64, 1u128, 1u64), l as usize)
        .collect();
    triples.push((0, w, 1));
    JobStream::from_triples(&triples).unwrap()
}

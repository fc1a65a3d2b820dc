use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream `task` of the generator seeded by `master`.
pub fn task_rng(master: u64, task: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(task);
    rng
}

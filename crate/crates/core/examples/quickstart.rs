//! Batch means on a two-state chain against the exact variance constant.

use regensim::analysis::{batch_means, BatchSchedule};
use regensim::ctmc::{asymptotic_variance_exact, simulate_ctmc, CtmcModel};
use regensim::{Functional, Streams, Trajectory};

fn main() -> regensim::Result<()> {
    let model = CtmcModel::from_rows(&[&[-1.0, 1.0], &[2.0, -2.0]])?;
    let f = Functional::indicator(2, &[0]);
    let exact = asymptotic_variance_exact(&model, &[1.0, 0.0])?; // 4/27
    let path: Trajectory = simulate_ctmc(&model, 0, 1e5, &mut Streams::new(7).stream(0))?.into();
    let est = batch_means(&path, &f, &BatchSchedule::power(0.5)?)?;
    println!("{} vs {exact}", est.sigma2);
    Ok(())
}

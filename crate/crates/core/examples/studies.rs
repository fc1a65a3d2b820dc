//! Runs both strategies and the landscape scan on the three-product instance.
//!
//! `cargo run --release -p shelfqaoa --example studies -- [runs] [seed]`

use shelfqaoa::oracle::Spectrum;
use shelfqaoa::qaoa::XBasisEvolver;
use shelfqaoa::strategies::{
    landscape_scan, multistart_study, recursive_study, Evaluator, LandscapeConfig, PrefixSource,
    StudyConfig,
};
use shelfqaoa::{build_qubo, qubo_to_ising, ProblemInstance};

fn main() -> shelfqaoa::Result<()> {
    let mut args = std::env::args().skip(1);
    let runs = args.next().map_or(500, |s| s.parse().expect("runs"));
    let seed = args.next().map_or(0, |s| s.parse().expect("seed"));

    let h = qubo_to_ising(&build_qubo(&ProblemInstance::three_products_two_shelves())?);
    let evolver = XBasisEvolver::new(&h);
    let ground = Spectrum::from_energies(h.n, evolver.spectrum().to_vec())?.ground_states();
    let eval = Evaluator::new(&evolver, &ground);

    let t = std::time::Instant::now();
    let grid = landscape_scan(&eval, &LandscapeConfig::default())?;
    let best = grid.argmin();
    println!(
        "landscape argmin gamma {:.4} beta {:.4} energy {:.4} ground {:.4}  ({:.2?})",
        best.gamma,
        best.beta,
        best.energy,
        best.ground_prob,
        t.elapsed()
    );

    let cfg = StudyConfig {
        runs,
        seed,
        ..Default::default()
    };
    let t = std::time::Instant::now();
    let ms = multistart_study(&eval, &cfg)?;
    println!("multistart {:?}  ({:.2?})", ms.means(), t.elapsed());
    for prefix in [PrefixSource::BestOfPrevious, PrefixSource::OwnChain] {
        let t = std::time::Instant::now();
        let rc = recursive_study(
            &eval,
            &StudyConfig {
                prefix,
                ..cfg.clone()
            },
        )?;
        println!(
            "recursive {prefix:?} {:?}  ({:.2?})",
            rc.means(),
            t.elapsed()
        );
    }
    Ok(())
}

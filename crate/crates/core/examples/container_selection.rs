//! The three container selectors on one overloaded host.

use brownout_sim::model::PowerProfile;
use brownout_sim::policies::{dimmer, expected_reduction, select_lucf, select_mncf, select_rsc, OptionalInstance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let ocl = vec![
        OptionalInstance::new("ads", 0.08),
        OptionalInstance::new("comments", 0.05),
        OptionalInstance::tagged("recommender", 0.09, "rec"),
        OptionalInstance::tagged("recommender-cache", 0.03, "rec"),
        OptionalInstance::new("thumbnails", 0.11),
    ];

    // 2 of 32 hosts overloaded; this one runs at 95%
    let theta = dimmer(2, 32);
    let profile = PowerProfile::sun_fire_v20z();
    let target = expected_reduction(&profile, 0.95, theta);
    println!("dimmer {theta:.3}, expected reduction {target:.3}");

    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for target in [target, 0.04, 0.15, 0.30] {
        println!("target {target:.3}");
        println!("  LUCF {:?}", select_lucf(&ocl, target));
        println!("  MNCF {:?}", select_mncf(&ocl, target));
        println!("  RSC  {:?}", select_rsc(&ocl, target, &mut rng));
    }
}

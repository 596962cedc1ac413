//! Dev probe: settle diagnostics and canonical-pose geometry.
use twist_core::rng::stream_rng;
use twist_core::*;

fn main() {
    let cfg = EnvConfig {
        domain_randomization: config::DomainRandomizationConfig::deterministic(),
        init_joint_noise: 0.0,
        ..EnvConfig::default()
    };
    let env = TwistEnv::new(cfg.clone()).unwrap();
    match env.spawn(stream_rng(1, 0)) {
        Ok(state) => {
            println!("settled z = {:.4}", state.bottle.root.position.z);
            println!("root pos  = {:?}", state.bottle.root.position);
            println!("lin vel   = {:?}", state.bottle.root.linear_velocity);
            println!("axis world= {:?}", state.bottle.axis_world());
            println!("base c world = {:?}", state.bottle.base_center_world());
            println!("lid  c world = {:?}", state.bottle.lid_center_world());
            for (i, tip) in state.hand.fingertips.iter().enumerate() {
                println!("tip {i}: [{:+.4} {:+.4} {:+.4}]", tip.x, tip.y, tip.z);
            }
            let kb = state.bottle.world_keypoints_base();
            let kl = state.bottle.world_keypoints_lid();
            let r = reward::reward_contact(&kb, &kl, &state.hand.fingertips[0..4], &state.hand.fingertips[4..8], cfg.contact_sharpness).unwrap();
            println!("contact reward at canonical pose = {r:.3}");
            for i in 0..8 {
                let tip = state.hand.fingertips[i];
                let src = if i < 4 { &kb } else { &kl };
                let d = src.iter().map(|p| (p - tip).norm()).fold(f64::INFINITY, f64::min);
                println!("tip {i} nearest keypoint distance = {:.4}", d);
            }
        }
        Err(e) => {
            println!("spawn failed: {e}");
            // Manual settle trace
            let env = TwistEnv::new(cfg).unwrap();
            let _ = env; // inspect below with internals if needed
        }
    }
}

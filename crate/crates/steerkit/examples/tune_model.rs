// temporary: gain sweep with dir-writing tripwires
use steerkit::config::{EvalSpec, ExperimentConfig, ModelSpec, SaeSpec, SteerMethodKind};
use steerkit::evalkit::StyleLabel;
use steerkit::pipeline::{conditional_flip_rate, run_steered_eval, SynthWorld};
use steerkit::steering::SteerMode;

fn main() {
    for gain in [8.0, 12.0, 20.0] {
        let mut config = ExperimentConfig { seed: 19, ..ExperimentConfig::default() };
        config.model = ModelSpec::Planted { d: 32, n_layers: 4, layer: 2, gain, vocab_size: 258 };
        config.sae = SaeSpec::Train { m: 128, l1_coeff: 1e-3, epochs: 400, lr: 0.05, samples: 1200 };
        config.eval = EvalSpec::Synthetic { n_eval: 20, gen_steps: 14, classifier_paragraphs: 80, classifier_dim: 512, target: StyleLabel::H1 };
        let world = SynthWorld::build(&config).unwrap();
        let n_mt = world.eval.iter().filter(|s| s.baseline_label == StyleLabel::Mt).count();
        print!("gain={gain}: baseMT={n_mt}/20");
        for alpha in [1.0, 5.0, 150.0] {
            let (report, rows) = run_steered_eval(&world, SteerMethodKind::SaeContrastive, alpha, SteerMode::Replace).unwrap();
            print!("  a{alpha}: H={:.3} f={:.2} q={:.0}", report.h, conditional_flip_rate(&rows, StyleLabel::H1), report.quality);
        }
        let (_, rows) = run_steered_eval(&world, SteerMethodKind::Actadd, 2.0, SteerMode::Replace).unwrap();
        println!("  aa2 f={:.2}", conditional_flip_rate(&rows, StyleLabel::H1));
        for alpha in [5.0, 150.0] {
            let iv = steerkit::steering::make_intervention(
                &steerkit::steering::SteerMethodSpec::SaeContrastive(world.steering_spec(alpha, SteerMode::Replace)),
                Some(&world.sae), steerkit::model::PositionPolicy::All).unwrap();
            let mut texts = vec![];
            for i in [0usize, 1, 2] {
                let out = steerkit::model::generate(&world.model, &world.eval[i].prompt, world.gen_steps, Some(&iv)).unwrap();
                texts.push(steerkit::model::tokenizer::decode(&out[world.eval[i].prompt.len()..]));
            }
            println!("   a{alpha}: {:?}", texts);
        }
    }
}

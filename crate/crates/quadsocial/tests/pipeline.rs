use quadsocial::config::Config;
use quadsocial::core::actuator::{ActuatorConfig, Posture};
use quadsocial::core::bridge::CommandKind;
use quadsocial::core::classifier::{ClassifierConfig, Gesture};
use quadsocial::core::model::{ModelContext, StagePoses};
use quadsocial::core::synth;
use quadsocial::hub::Hub;
use quadsocial::pipeline::{build_actuator, concat_clips, replay};

#[test]
fn concatenated_clips_keep_frame_spacing() {
    let a = synth::clip(Gesture::OpenPalm, 1, 10);
    let b = synth::clip(Gesture::Nod, 2, 10);
    let all = concat_clips(&[a, b]);
    assert_eq!(all.len(), 20);
    assert!(all.windows(2).all(|w| w[1].t_ms == w[0].t_ms + synth::FRAME_MS));
    assert_eq!(all[0].t_ms, 0);
}

#[test]
fn scripted_replay_drives_the_robot() {
    let clips: Vec<_> = [(Gesture::OpenPalm, 20), (Gesture::ThumbUp, 20), (Gesture::PointingUp, 20), (Gesture::Nod, 45)]
        .into_iter()
        .enumerate()
        .map(|(i, (g, n))| synth::clip(g, 40 + i as u64, n))
        .collect();
    let frames = concat_clips(&clips);
    let mut hub = Hub::new(ClassifierConfig::default()).unwrap();
    let ctx = ModelContext::default();
    let mut robot = build_actuator(&ctx, ActuatorConfig::default(), &StagePoses::default(), &Default::default()).unwrap();
    let speed0 = robot.state().speed_level;
    let applied = replay(&frames, &mut hub, &mut robot);

    let kinds: Vec<CommandKind> = applied.iter().map(|a| a.cmd.kind).collect();
    assert_eq!(kinds, [CommandKind::MoveFwd, CommandKind::SpeedUp, CommandKind::Stop, CommandKind::Stand]);
    assert!(applied.iter().all(|a| a.result.is_ok()));
    assert_eq!(applied[0].state.active_motion, Some(CommandKind::MoveFwd));
    assert_eq!(applied[1].state.speed_level, speed0 + 1);
    assert_eq!(applied[2].state.active_motion, None);
    assert_eq!(applied[3].state.posture, Posture::Standing);
    assert_eq!(applied.iter().map(|a| a.cmd.seq).collect::<Vec<_>>(), [0, 1, 2, 3]);
}

#[test]
fn gestures_need_checkpoints() {
    let ctx = ModelContext::default();
    let robot = build_actuator(&ctx, ActuatorConfig::default(), &StagePoses::default(), &Default::default()).unwrap();
    assert!(!robot.has_gesture(CommandKind::GestureG1));
}

#[test]
fn config_file_reaches_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("cfg.toml");
    std::fs::write(&p, "[classifier]\nstable_frames = 5\n[bridge]\nport = 9100\n[geometry]\nmass = 14.0\n").unwrap();
    let cfg = Config::load(&p).unwrap();
    assert_eq!(cfg.classifier().unwrap().stable_frames, 5);
    assert_eq!(cfg.port(), 9100);
    let ctx = cfg.model().unwrap();
    assert_eq!(ctx.geometry.mass, 14.0);
    assert_eq!(ctx.reward.q_default, ctx.geometry.q_nominal());
}

//! Fixture builders shared by the integration test targets.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_blindspot"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn blindspot")
}

pub fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// The five published classes plus an "Other activities" filler that brings
/// the total to 1674.
pub fn har_counts() -> &'static str {
    "activity,count\n\
     Walking,307\n\
     Stairs up,134\n\
     Stairs down,144\n\
     Front fall,122\n\
     Backward fall,122\n\
     Other activities,845\n"
}

pub fn har_weights() -> &'static str {
    "# consequence weights\n\
     Walking\t0.2\n\
     Stairs up\t0.6\n\
     Stairs down\t0.6\n\
     Front fall\t1.0\n\
     Backward fall\t1.0\n\
     Other activities\t0\n"
}

/// A synthetic PAMAP2 protocol file: `blocks` of (activity, seconds, tilt
/// in degrees, gyro amplitude) at 100 Hz with the chest IMU populated.
pub fn pamap2_file(blocks: &[(u32, f64, f64, f64)]) -> String {
    let mut out = String::new();
    let mut t = 0.0;
    for &(activity, secs, tilt_deg, amp) in blocks {
        let rows = (secs * 100.0).round() as usize;
        let (sin, cos) = tilt_deg.to_radians().sin_cos();
        for i in 0..rows {
            let mut cols = vec!["0".to_string(); 54];
            cols[0] = format!("{t:.2}");
            cols[1] = activity.to_string();
            cols[2] = "NaN".into();
            let phase = i as f64 * 0.1;
            cols[21] = format!("{:.4}", 9.81 * sin);
            cols[22] = "0".into();
            cols[23] = format!("{:.4}", 9.81 * cos);
            cols[27] = format!("{:.4}", amp * phase.sin());
            cols[28] = format!("{:.4}", amp * phase.cos());
            cols[29] = "0".into();
            // Sparse gaps exercise forward fill.
            if i % 97 == 5 {
                cols[21] = "NaN".into();
            }
            out.push_str(&cols.join(" "));
            out.push('\n');
            t += 0.01;
        }
    }
    out
}

pub fn imu_csv(blocks: &[(&str, usize, f64, f64)]) -> String {
    let mut out = String::from("activity,acc_x,acc_y,acc_z,gyro_x,gyro_y,gyro_z\n");
    for &(label, rows, tilt_deg, amp) in blocks {
        let (sin, cos) = tilt_deg.to_radians().sin_cos();
        for i in 0..rows {
            let ph = i as f64 * 0.2;
            writeln!(
                out,
                "{label},{:.4},0,{:.4},{:.4},{:.4},0",
                9.81 * sin,
                9.81 * cos,
                amp * ph.sin(),
                amp * ph.cos()
            )
            .unwrap();
        }
    }
    out
}

pub fn diagnoses_csv() -> &'static str {
    "subject_id,hadm_id,seq_num,icd_code,icd_version\n\
     1,100,1,I2510,10\n\
     1,100,2,E119,10\n\
     2,101,1,I2510,10\n\
     3,102,1,A419,10\n\
     3,103,2,J189,10\n\
     4,104,1,N179,10\n\
     4,105,1,I2510,10\n"
}

pub fn sweep_spec() -> &'static str {
    "families = zipf:1.2, geometric:0.95, uniform\n\
     k = 50\n\
     n = 40, 200\n\
     tau = 1, 3\n\
     trials = 20\n\
     master_seed = 7\n"
}

pub fn tallies_csv() -> &'static str {
    "class,successes,trials\nwalk,5,5\nfall,0,5\nrun,50,100\n"
}

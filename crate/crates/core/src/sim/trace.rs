use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use super::SimConfig;
use crate::kinematic::VelocityCommand;
use crate::vehicle::{BodyVelocity, Pose, Torque, VehicleState};

/// Bumped whenever [`TRACE_COLUMNS`] or the header layout changes.
pub const TRACE_SCHEMA_VERSION: u32 = 1;

/// Column names and units of the trace CSV, in order.
pub const TRACE_COLUMNS: [(&str, &str); 48] = [
    ("t", "s"),
    ("ref_x", "m"),
    ("ref_y", "m"),
    ("ref_psi", "rad"),
    ("ref_u", "m/s"),
    ("ref_v", "m/s"),
    ("ref_r", "rad/s"),
    ("x", "m"),
    ("y", "m"),
    ("psi", "rad"),
    ("u", "m/s"),
    ("v", "m/s"),
    ("r", "rad/s"),
    ("meas_x", "m"),
    ("meas_y", "m"),
    ("meas_psi", "rad"),
    ("meas_u", "m/s"),
    ("meas_v", "m/s"),
    ("meas_r", "rad/s"),
    ("est_x", "m"),
    ("est_y", "m"),
    ("est_psi", "rad"),
    ("est_u", "m/s"),
    ("est_v", "m/s"),
    ("est_r", "rad/s"),
    ("u_c", "m/s"),
    ("v_c", "m/s"),
    ("r_c", "rad/s"),
    ("fb_u", "m/s"),
    ("fb_v", "m/s"),
    ("fb_r", "rad/s"),
    ("tau_x_raw", "N"),
    ("tau_y_raw", "N"),
    ("tau_n_raw", "N*m"),
    ("tau_x", "N"),
    ("tau_y", "N"),
    ("tau_n", "N*m"),
    ("s_u", "m/s^2"),
    ("s_v", "m/s^2"),
    ("s_r", "rad/s^2"),
    ("l1", "m"),
    ("l2", "m"),
    ("l3", "rad"),
    ("l4_x", "N"),
    ("l4_y", "N"),
    ("l4_n", "N*m"),
    ("v_p", "-"),
    ("v_z", "-"),
];

/// One sample of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    /// Reference posture and body velocity.
    pub reference: VehicleState,
    pub truth: VehicleState,
    pub measured: VehicleState,
    /// The state the controllers acted on.
    pub estimated: VehicleState,
    pub command: VelocityCommand,
    /// Error-feedback part of the velocity command.
    pub feedback: [f64; 3],
    pub raw_torque: Torque,
    pub applied_torque: Torque,
    pub sliding: [f64; 3],
    pub kin_activity: [f64; 3],
    pub smc_activity: [f64; 3],
    pub v_p: f64,
    pub v_z: f64,
}

fn state_values(s: &VehicleState) -> [f64; 6] {
    let [x, y, psi] = s.pose.to_array();
    let [u, v, r] = s.vel.to_array();
    [x, y, psi, u, v, r]
}

fn state_from(v: &[f64]) -> VehicleState {
    VehicleState {
        pose: Pose {
            x: v[0],
            y: v[1],
            psi: v[2],
        },
        vel: BodyVelocity::new(v[3], v[4], v[5]),
    }
}

impl TraceRow {
    pub fn values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(TRACE_COLUMNS.len());
        out.push(self.t);
        out.extend(state_values(&self.reference));
        out.extend(state_values(&self.truth));
        out.extend(state_values(&self.measured));
        out.extend(state_values(&self.estimated));
        out.extend(self.command.to_array());
        out.extend(self.feedback);
        out.extend(self.raw_torque.to_array());
        out.extend(self.applied_torque.to_array());
        out.extend(self.sliding);
        out.extend(self.kin_activity);
        out.extend(self.smc_activity);
        out.push(self.v_p);
        out.push(self.v_z);
        out
    }

    fn from_values(v: &[f64]) -> Self {
        let a3 = |i: usize| [v[i], v[i + 1], v[i + 2]];
        Self {
            t: v[0],
            reference: state_from(&v[1..7]),
            truth: state_from(&v[7..13]),
            measured: state_from(&v[13..19]),
            estimated: state_from(&v[19..25]),
            command: VelocityCommand {
                u_c: v[25],
                v_c: v[26],
                r_c: v[27],
            },
            feedback: a3(28),
            raw_torque: Torque::from_array(a3(31)),
            applied_torque: Torque::from_array(a3(34)),
            sliding: a3(37),
            kin_activity: a3(40),
            smc_activity: a3(43),
            v_p: v[46],
            v_z: v[47],
        }
    }
}

/// A complete run together with the configuration that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub config: SimConfig,
    pub rows: Vec<TraceRow>,
}

const MAGIC: &str = "# uuv-hybrid trace";

impl SimTrace {
    pub fn duration(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.t) - self.rows.first().map_or(0.0, |r| r.t)
    }

    pub fn dt(&self) -> f64 {
        self.config.scenario.dt
    }

    /// Writes the trace as CSV. Comment lines carry the schema version, the
    /// seed, the fully resolved configuration (JSON) and the column units;
    /// values use the shortest round-trip representation, so the file is
    /// loss-free.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let config = serde_json::to_string(&self.config).map_err(io::Error::other)?;
        writeln!(w, "{MAGIC} schema={TRACE_SCHEMA_VERSION}")?;
        match self.config.scenario.seed() {
            Some(seed) => writeln!(w, "# seed={seed}")?,
            None => writeln!(w, "# seed=none")?,
        }
        writeln!(w, "# config={config}")?;
        let units: Vec<&str> = TRACE_COLUMNS.iter().map(|c| c.1).collect();
        writeln!(w, "# units={}", units.join(","))?;
        let names: Vec<&str> = TRACE_COLUMNS.iter().map(|c| c.0).collect();
        writeln!(w, "{}", names.join(","))?;
        let mut line = String::new();
        for row in &self.rows {
            line.clear();
            for (i, v) in row.values().iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&v.to_string());
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("trace CSV is ASCII")
    }

    /// Parses a CSV written by [`SimTrace::write_csv`].
    pub fn read_csv<R: BufRead>(r: R) -> io::Result<Self> {
        let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
        let mut config = None;
        let mut rows = Vec::new();
        let mut saw_header = false;
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            if n == 0 {
                let expected = format!("{MAGIC} schema={TRACE_SCHEMA_VERSION}");
                if line != expected {
                    return Err(bad(format!("unsupported trace header `{line}`")));
                }
                continue;
            }
            if let Some(json) = line.strip_prefix("# config=") {
                config = Some(serde_json::from_str::<SimConfig>(json).map_err(|e| bad(e.to_string()))?);
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            if !saw_header {
                saw_header = true;
                continue;
            }
            let values: Vec<f64> = line
                .split(',')
                .map(|s| s.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| bad(format!("line {}: {e}", n + 1)))?;
            if values.len() != TRACE_COLUMNS.len() {
                return Err(bad(format!("line {}: expected {} columns", n + 1, TRACE_COLUMNS.len())));
            }
            rows.push(TraceRow::from_values(&values));
        }
        let config = config.ok_or_else(|| bad("missing `# config=` header".into()))?;
        Ok(Self { config, rows })
    }
}

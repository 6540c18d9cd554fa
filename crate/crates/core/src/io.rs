//! Trajectory CSV reading and writing.
//!
//! Header: `agent_id,t,x,y[,goal_x,goal_y,comfort_speed,radius]`. Times are in
//! seconds, coordinates in meters. Every agent must be sampled at the same
//! uniform times; input at any other rate is resampled to [`CANONICAL_DT`].

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use glam::DVec2;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::trajectory::{derive_kinematics, resample, AgentId, AgentTrack, CrowdTrajectory, CANONICAL_DT};

const REQUIRED_COLUMNS: [&str; 4] = ["agent_id", "t", "x", "y"];
const OPTIONAL_COLUMNS: [&str; 4] = ["goal_x", "goal_y", "comfort_speed", "radius"];

#[derive(Debug, Deserialize)]
struct Row {
    agent_id: u32,
    t: f64,
    x: f64,
    y: f64,
    #[serde(default)]
    goal_x: Option<f64>,
    #[serde(default)]
    goal_y: Option<f64>,
    #[serde(default)]
    comfort_speed: Option<f64>,
    #[serde(default)]
    radius: Option<f64>,
}

pub fn read_crowd_csv(path: impl AsRef<Path>) -> Result<CrowdTrajectory> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_crowd(file).map_err(|e| match e {
        Error::MalformedInput(msg) => Error::MalformedInput(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn read_crowd<R: Read>(reader: R) -> Result<CrowdTrajectory> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    for required in REQUIRED_COLUMNS {
        if !headers.iter().any(|h| h == required) {
            return Err(Error::MalformedInput(format!("missing column `{required}`")));
        }
    }
    if let Some(unknown) = headers
        .iter()
        .find(|h| !REQUIRED_COLUMNS.contains(h) && !OPTIONAL_COLUMNS.contains(h))
    {
        return Err(Error::MalformedInput(format!("unknown column `{unknown}`")));
    }

    let mut by_agent: BTreeMap<u32, Vec<Row>> = BTreeMap::new();
    for (line, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row?;
        if !(row.t.is_finite() && row.x.is_finite() && row.y.is_finite()) {
            return Err(Error::MalformedInput(format!(
                "row {}: non-finite value for agent {}",
                line + 2,
                row.agent_id
            )));
        }
        by_agent.entry(row.agent_id).or_default().push(row);
    }
    if by_agent.is_empty() {
        return Err(Error::MalformedInput("no trajectory rows".into()));
    }

    let mut times: Option<Vec<f64>> = None;
    let mut tracks = Vec::with_capacity(by_agent.len());
    for (id, mut rows) in by_agent {
        rows.sort_by(|a, b| a.t.total_cmp(&b.t));
        if rows.windows(2).any(|w| w[0].t == w[1].t) {
            return Err(Error::MalformedInput(format!("agent {id}: duplicate timestamps")));
        }
        let agent_times: Vec<f64> = rows.iter().map(|r| r.t).collect();
        match &times {
            None => times = Some(agent_times),
            Some(shared) => {
                let same = shared.len() == agent_times.len()
                    && shared.iter().zip(&agent_times).all(|(a, b)| (a - b).abs() <= 1e-9);
                if !same {
                    return Err(Error::MalformedInput(format!(
                        "agent {id} is not sampled on the shared time axis"
                    )));
                }
            }
        }
        let first = &rows[0];
        let goal = match (first.goal_x, first.goal_y) {
            (Some(x), Some(y)) => Some(DVec2::new(x, y)),
            (None, None) => None,
            _ => {
                return Err(Error::MalformedInput(format!(
                    "agent {id}: goal_x and goal_y must be given together"
                )))
            }
        };
        tracks.push(AgentTrack {
            agent_id: AgentId(id),
            positions: rows.iter().map(|r| DVec2::new(r.x, r.y)).collect(),
            goal,
            comfort_speed: first.comfort_speed,
            body_radius: first.radius,
        });
    }

    let times = times.unwrap_or_default();
    if times.len() < 2 {
        return Err(Error::MalformedInput(
            "at least 2 timesteps per agent are required".into(),
        ));
    }
    let t0 = times[0];
    let dt = (times[times.len() - 1] - t0) / (times.len() - 1) as f64;
    let uniform = times
        .iter()
        .enumerate()
        .all(|(i, &t)| (t - (t0 + i as f64 * dt)).abs() <= 1e-6 * t.abs().max(1.0));
    if !uniform {
        return Err(Error::MalformedInput("time axis is not uniformly sampled".into()));
    }

    let canonical = (dt - CANONICAL_DT).abs() <= 1e-9;
    let mut crowd = derive_kinematics(&tracks, if canonical { CANONICAL_DT } else { dt })?;
    crowd.t0 = t0;
    if !canonical {
        crowd = resample(&crowd, CANONICAL_DT)?;
    }
    Ok(crowd)
}

pub fn write_crowd_csv(path: impl AsRef<Path>, crowd: &CrowdTrajectory) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    write_crowd(&mut out, crowd).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Write every column, using shortest round-trip float formatting so that
/// reading the file back reproduces the crowd bit-for-bit.
pub fn write_crowd<W: Write>(out: &mut W, crowd: &CrowdTrajectory) -> std::io::Result<()> {
    writeln!(out, "agent_id,t,x,y,goal_x,goal_y,comfort_speed,radius")?;
    for c in &crowd.characters {
        let goal = c.individuals.goal;
        for (step, s) in c.states.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                c.statics.agent_id,
                crowd.time(step),
                s.position.x,
                s.position.y,
                goal.x,
                goal.y,
                c.individuals.comfort_speed,
                c.statics.body_radius
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_only_input_gets_defaults() {
        let text = "agent_id,t,x,y\n1,0.0,0,0\n1,0.1,0.1,0\n1,0.2,0.2,0\n2,0.0,5,5\n2,0.1,5,5.1\n2,0.2,5,5.2\n";
        let crowd = read_crowd(text.as_bytes()).unwrap();
        assert_eq!(crowd.agent_count(), 2);
        assert_eq!(crowd.steps(), 3);
        assert_eq!(crowd.dt, CANONICAL_DT);
        let c = &crowd.characters[1];
        assert_eq!(c.statics.agent_id, AgentId(2));
        assert_eq!(c.individuals.goal, DVec2::new(5.0, 5.2));
        assert!((c.individuals.comfort_speed - 1.0).abs() < 1e-9);
    }

    #[test]
    fn coarse_input_is_resampled() {
        let text = "agent_id,t,x,y\n1,0,0,0\n1,0.4,0.4,0\n1,0.8,0.8,0\n";
        let crowd = read_crowd(text.as_bytes()).unwrap();
        assert_eq!(crowd.dt, CANONICAL_DT);
        assert_eq!(crowd.steps(), 9);
        assert!((crowd.characters[0].states[3].position.x - 0.3).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let ragged = "agent_id,t,x,y\n1,0,0,0\n1,0.1,0,0\n2,0,1,1\n";
        assert!(matches!(read_crowd(ragged.as_bytes()), Err(Error::MalformedInput(_))));
        let unknown = "agent_id,t,x,y,z\n1,0,0,0,0\n1,0.1,0,0,0\n";
        assert!(matches!(read_crowd(unknown.as_bytes()), Err(Error::MalformedInput(_))));
        let missing = "agent_id,x,y\n1,0,0\n";
        assert!(matches!(read_crowd(missing.as_bytes()), Err(Error::MalformedInput(_))));
        let short = "agent_id,t,x,y\n1,0,0,0\n";
        assert!(matches!(read_crowd(short.as_bytes()), Err(Error::MalformedInput(_))));
        let nonuniform = "agent_id,t,x,y\n1,0,0,0\n1,0.1,0,0\n1,0.3,0,0\n";
        assert!(matches!(read_crowd(nonuniform.as_bytes()), Err(Error::MalformedInput(_))));
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let tracks: Vec<AgentTrack> = (0..3)
            .map(|i| {
                let mut t = AgentTrack::new(
                    AgentId(i),
                    (0..40)
                        .map(|k| {
                            let s = k as f64 * 0.1;
                            DVec2::new(s.sin() * (i as f64 + 1.3), s * 0.77 + i as f64 / 3.0)
                        })
                        .collect(),
                );
                t.goal = Some(DVec2::new(10.0 / 3.0, -1.1));
                t.comfort_speed = Some(1.37);
                t.body_radius = Some(0.25);
                t
            })
            .collect();
        let crowd = derive_kinematics(&tracks, CANONICAL_DT).unwrap();
        let mut buf = Vec::new();
        write_crowd(&mut buf, &crowd).unwrap();
        let back = read_crowd(buf.as_slice()).unwrap();
        assert_eq!(back, crowd);
    }
}

use std::io::{Read, Write};

use super::{EpidemicError, EpidemicState, ObservationSet, Result};

/// One row per step: `step,p_0..p_{n-1}` plus `r_0..r_{n-1}` for SIR.
/// Floats are written in shortest round-trip form.
pub fn write_trajectory_csv(traj: &[EpidemicState], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let Some(first) = traj.first() else {
        w.flush()?;
        return Ok(());
    };
    let n = first.n();
    let sir = first.r.is_some();
    let mut header = vec!["step".to_string()];
    header.extend((0..n).map(|i| format!("p_{i}")));
    if sir {
        header.extend((0..n).map(|i| format!("r_{i}")));
    }
    w.write_record(&header)?;
    for (step, s) in traj.iter().enumerate() {
        if s.n() != n || s.r.is_some() != sir {
            return Err(EpidemicError::InvalidParameter("trajectory states differ in shape".into()));
        }
        let mut row = vec![step.to_string()];
        row.extend(s.p.iter().map(f64::to_string));
        if let Some(r) = &s.r {
            row.extend(r.iter().map(f64::to_string));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_trajectory_csv`].
pub fn read_trajectory_csv(input: impl Read) -> Result<Vec<EpidemicState>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    let n = headers.iter().filter(|h| h.starts_with("p_")).count();
    let sir = headers.iter().any(|h| h.starts_with("r_"));
    let bad = |msg: String| EpidemicError::InvalidParameter(msg);
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let values: Vec<f64> = record
            .iter()
            .skip(1)
            .map(|s| s.parse::<f64>().map_err(|_| bad(format!("bad number {s:?}"))))
            .collect::<Result<_>>()?;
        let expected = if sir { 2 * n } else { n };
        if values.len() != expected {
            return Err(bad(format!("row has {} values, expected {expected}", values.len())));
        }
        let p = values[..n].to_vec();
        out.push(if sir {
            EpidemicState::sir(p, values[n..].to_vec())
        } else {
            EpidemicState::sis(p)
        });
    }
    Ok(out)
}

/// One row per node: `node,y,mask,pi`.
pub fn write_observations_csv(obs: &ObservationSet, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "y", "mask", "pi"])?;
    for i in 0..obs.y.len() {
        w.write_record([
            i.to_string(),
            obs.y[i].to_string(),
            obs.mask[i].to_string(),
            obs.pi[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_round_trip() {
        let traj = vec![
            EpidemicState::sir(vec![0.1, 1.0 / 3.0], vec![0.0, 0.2]),
            EpidemicState::sir(vec![0.09, 0.3], vec![0.01, 0.2333333333333333]),
        ];
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("step,p_0,p_1,r_0,r_1\n"));
        assert_eq!(read_trajectory_csv(&buf[..]).unwrap(), traj);

        let sis = vec![EpidemicState::sis(vec![0.5]); 3];
        let mut buf = Vec::new();
        write_trajectory_csv(&sis, &mut buf).unwrap();
        assert_eq!(read_trajectory_csv(&buf[..]).unwrap(), sis);
    }

    #[test]
    fn observations_csv_layout() {
        let obs = ObservationSet {
            y: vec![1.0, 0.0],
            mask: vec![1.0, 0.0],
            alpha: 0.0,
            pi: vec![1.0, 0.5],
            seed: 1,
        };
        let mut buf = Vec::new();
        write_observations_csv(&obs, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "node,y,mask,pi\n0,1,1,1\n1,0,0,0.5\n");
    }
}

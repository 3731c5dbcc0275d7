//! Interpretability reports over a fitted model, and their CSV forms.

use std::io::Write;

use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// 0-based index of each row's largest entry; ties go to the lowest index.
pub fn cluster_assign(h: ArrayView2<f64>) -> Vec<usize> {
    h.axis_iter(Axis(0))
        .map(|row| {
            row.iter()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |best, (i, &v)| if v > best.1 { (i, v) } else { best },
                )
                .0
        })
        .collect()
}

/// Prefix sums down each column of `w`: the cumulative share of budget spent
/// by each pattern after every month.
pub fn cumulative_patterns(w: ArrayView2<f64>) -> Array2<f64> {
    let mut out = w.to_owned();
    out.accumulate_axis_inplace(Axis(0), |&prev, cur| *cur += prev);
    out
}

/// `month_index,component_1,...,component_F`.
pub fn write_patterns_csv<W: Write>(out: W, cumulative: ArrayView2<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["month_index".to_string()];
    header.extend((1..=cumulative.ncols()).map(|f| format!("component_{f}")));
    w.write_record(&header)?;
    for (m, row) in cumulative.axis_iter(Axis(0)).enumerate() {
        let mut record = vec![m.to_string()];
        record.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// `project_id,component` with 1-based components.
pub fn write_clusters_csv<W: Write>(out: W, project_ids: &[String], labels: &[usize]) -> Result<()> {
    if project_ids.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} projects vs {} labels",
            project_ids.len(),
            labels.len()
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["project_id", "component"])?;
    for (id, label) in project_ids.iter().zip(labels) {
        w.write_record([id.as_str(), &(label + 1).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `project_id,month_index,predicted_expense,is_observed`, one line per cell,
/// project by project.
pub fn write_forecasts_csv<W: Write>(
    out: W,
    project_ids: &[String],
    expenses: ArrayView2<f64>,
    mask: ArrayView2<bool>,
) -> Result<()> {
    if expenses.dim() != mask.dim() || expenses.ncols() != project_ids.len() {
        return Err(Error::ShapeMismatch(format!(
            "forecast {:?}, mask {:?}, {} projects",
            expenses.dim(),
            mask.dim(),
            project_ids.len()
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["project_id", "month_index", "predicted_expense", "is_observed"])?;
    for (n, id) in project_ids.iter().enumerate() {
        for m in 0..expenses.nrows() {
            w.write_record([
                id.as_str(),
                &m.to_string(),
                &expenses[[m, n]].to_string(),
                if mask[[m, n]] { "true" } else { "false" },
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn cluster_examples() {
        let h = array![[0.1, 0.7, 0.2], [0.5, 0.5, 0.0], [0.0, 0.0, 1.0]];
        assert_eq!(cluster_assign(h.view()), vec![1, 0, 2]);
        let scaled = h.mapv(|v| v * 3.5);
        assert_eq!(cluster_assign(scaled.view()), vec![1, 0, 2]);
    }

    #[test]
    fn cumulative_examples() {
        let w = array![[0.5, 1.0], [0.3, 0.0], [0.2, 0.0]];
        let c = cumulative_patterns(w.view());
        assert_eq!(c.column(0).to_vec(), vec![0.5, 0.8, 1.0]);
        assert_eq!(c.column(1).to_vec(), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn csv_shapes() {
        let mut buf = Vec::new();
        write_patterns_csv(&mut buf, array![[0.5, 1.0], [1.0, 1.0]].view()).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "month_index,component_1,component_2\n0,0.5,1\n1,1,1\n"
        );
        let mut buf = Vec::new();
        write_clusters_csv(&mut buf, &["a".into(), "b".into()], &[0, 2]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "project_id,component\na,1\nb,3\n");
        let mut buf = Vec::new();
        write_forecasts_csv(
            &mut buf,
            &["a".into()],
            array![[2.5], [7.5]].view(),
            array![[true], [false]].view(),
        )
        .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "project_id,month_index,predicted_expense,is_observed\na,0,2.5,true\na,1,7.5,false\n"
        );
    }
}

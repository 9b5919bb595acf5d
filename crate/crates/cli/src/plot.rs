//! Matplotlib scripts that read a written result file and draw it.

use std::path::{Path, PathBuf};

use crate::config::CommandName;

const LOADER: &str = r##"import csv, json, sys
import numpy as np
import matplotlib.pyplot as plt

PATH = sys.argv[1] if len(sys.argv) > 1 else DEFAULT_PATH

def load(path):
    if path.endswith(".json"):
        doc = json.load(open(path))
        cols = doc["columns"]
        rows = [[np.nan if v is None else v for v in r] for r in doc["rows"]]
        return {c: np.array([r[i] for r in rows]) for i, c in enumerate(cols)}
    lines = [l for l in open(path) if not l.startswith("#")]
    cols, *rows = list(csv.reader(lines))
    def conv(v):
        if v in ("true", "false"):
            return float(v == "true")
        try:
            return float(v)
        except ValueError:
            return np.nan
    return {c: np.array([conv(r[i]) for r in rows]) for i, c in enumerate(cols)}

d = load(PATH)
"##;

fn body(cmd: CommandName) -> &'static str {
    match cmd {
        CommandName::HopfLocus => {
            r#"for b in np.unique(d["branch"][~np.isnan(d["branch"])]):
    m = d["branch"] == b
    plt.plot(d["parameter"][m], d["kbar"][m], ".", ms=3, label=f"branch {int(b)}")
plt.xlabel("parameter"); plt.ylabel("critical coupling"); plt.legend()
"#
        }
        CommandName::NormalForm => {
            r#"plt.bar(["Re a", "Im a", "Re b", "Im b"], [d["aRe"][0], d["aIm"][0], d["bRe"][0], d["bIm"][0]])
plt.title(f"first Hopf value {d['kbar'][0]:.6g}")
"#
        }
        CommandName::RegionMap => {
            r#"xs, ys = np.unique(d["x"]), np.unique(d["y"])
z = d["kbar"].reshape(len(ys), len(xs))
plt.pcolormesh(xs, ys, z, shading="auto"); plt.colorbar(label="first critical coupling")
plt.xlabel("x"); plt.ylabel("y")
"#
        }
        CommandName::Diagram => {
            r#"xs, ks = np.unique(d["parameter"]), np.unique(d["k"])
z = d["crossedBranches"].reshape(len(ks), len(xs))
plt.pcolormesh(xs, ks, z, shading="auto"); plt.colorbar(label="crossed branches")
plt.contour(xs, ks, z, levels=np.arange(0.5, np.nanmax(z) + 1), colors="k", linewidths=0.7)
plt.xlabel("parameter"); plt.ylabel("k")
"#
        }
        CommandName::Meanfield => {
            r#"plt.plot(d["t"], d["absAlpha"], label="|alpha|")
plt.plot(d["t"], d["absDelayed"], label="delayed |r|")
plt.xlabel("t"); plt.legend()
"#
        }
        CommandName::Sweep => {
            r#"plt.plot(d["k"], d["upAmplitude"], "o-", label="up")
plt.plot(d["k"], d["downAmplitude"], "s--", label="down")
plt.xlabel("k"); plt.ylabel("tail |alpha|"); plt.legend()
"#
        }
        CommandName::EnsembleProbe => {
            r#"plt.errorbar(d["k"], d["meanAbsR"], yerr=d["stdAbsR"], fmt="ko", label="mean |r|")
plt.plot(d["k"], d["minAbsR"], "g.", label="min |r|")
plt.plot(d["k"], d["filteredMeanAbsR"], "r^", label="mean |r| >= 0.2")
plt.xlabel("k"); plt.legend()
"#
        }
        CommandName::DoubleHopf => {
            r#"plt.plot([d["beta1"][0], d["beta2"][0]], [d["kbar1"][0], d["kbar2"][0]], "ko")
plt.xlabel("beta"); plt.ylabel("critical coupling"); plt.title(f"double Hopf at {d['parameter'][0]:.6g}")
"#
        }
        CommandName::Verify => {
            r#"plt.barh([str(int(i)) for i in d["id"]], d["seconds"], color=["g" if p else "r" for p in d["passed"]])
plt.xlabel("seconds"); plt.ylabel("criterion")
"#
        }
    }
}

pub fn script(cmd: CommandName, data: &Path) -> String {
    let default = format!("DEFAULT_PATH = {:?}\n", data.to_string_lossy());
    format!("{default}{LOADER}{}plt.tight_layout()\nplt.show()\n", body(cmd))
}

/// `<out>.plot.py` next to the result file.
pub fn script_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".plot.py");
    PathBuf::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn script_names_its_input() {
        let s = script(CommandName::Sweep, Path::new("out/sweep.csv"));
        assert!(s.starts_with("DEFAULT_PATH = \"out/sweep.csv\"\n"));
        assert!(s.contains("upAmplitude"));
        assert_eq!(script_path(Path::new("a/b.csv")), PathBuf::from("a/b.csv.plot.py"));
    }
}

//! Companion plot scripts for the CSV artifacts.

fn fluxmap_script(csv: &str, title: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key off\n\
         set multiplot layout 1,2 title '{title}'\n\
         set xlabel 'id [A]'\n\
         set ylabel 'phid [Wb]'\n\
         plot '{csv}' every ::1 using 3:5:2 with points pt 7 ps 0.3 lc variable\n\
         set xlabel 'iq [A]'\n\
         set ylabel 'phiq [Wb]'\n\
         plot '{csv}' every ::1 using 4:6:2 with points pt 7 ps 0.3 lc variable\n\
         unset multiplot\n\
         pause mouse close\n"
    )
}

const INDUCTANCE: &str = "set datafile separator ','\n\
set key outside\n\
set xlabel 'id [A]'\n\
set ylabel 'iq [A]'\n\
set zlabel 'L [H]'\n\
splot 'inductance.csv' every ::1 using 1:2:3 title 'Ldd' with points pt 7 ps 0.3, \\\n\
      '' every ::1 using 1:2:4 title 'Ldq' with points pt 7 ps 0.3, \\\n\
      '' every ::1 using 1:2:5 title 'Lqq' with points pt 7 ps 0.3\n\
pause mouse close\n";

pub fn scripts(classical: bool, saliency: bool) -> Vec<(String, String)> {
    let mut out = Vec::new();
    if classical {
        out.push((
            "classical_fluxmap.gp".to_owned(),
            fluxmap_script("classical_fluxmap.csv", "classical"),
        ));
    }
    if saliency {
        out.push((
            "saliency_fluxmap.gp".to_owned(),
            fluxmap_script("saliency_fluxmap.csv", "signal injection"),
        ));
        out.push(("inductance.gp".to_owned(), INDUCTANCE.to_owned()));
    }
    out
}

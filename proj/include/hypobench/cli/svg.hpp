#pragma once

#include <string>
#include <vector>

namespace hypobench::cli {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

/// Line chart on the unit square with a legend. Each series is also written
/// into an XML comment as `x,y` rows so the data can be recovered from the
/// file. `diagonal` draws the chance line y = x.
std::string curve_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series, bool diagonal);

/// Square matrix of p-values; cells are shaded by -log10(p) and labelled
/// with the value. Diagonal cells (NaN) are left blank.
std::string heatmap_svg(const std::string& title, const std::vector<std::string>& names,
                        const std::vector<std::vector<double>>& p_values);

}  // namespace hypobench::cli

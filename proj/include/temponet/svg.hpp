#pragma once

#include <string>
#include <vector>

#include "temponet/common.hpp"

namespace temponet {

// Overlay of the observed tail, the true continuation, and the forecast for
// one window; x axis in steps relative to the forecast origin.
void write_forecast_svg(const std::string& path,
                        const std::vector<double>& context,
                        const std::vector<double>& truth,
                        const std::vector<double>& predicted,
                        const std::string& title);

// Box-and-whisker summary (median, quartiles, 1.5 IQR whiskers, outlier dots)
// of one sample set per label.
void write_box_plot_svg(const std::string& path,
                        const std::vector<std::string>& labels,
                        const std::vector<std::vector<double>>& samples,
                        const std::string& title);

}  // namespace temponet

#pragma once

#include "kgan/gan.hpp"

#include <string>

namespace kgan {

/// Loss-vs-epoch line chart (generator dark, discriminator gray) rendered
/// with the in-repo rasterizer and written as a PGM file.
void render_history_plot(const TrainingHistory& history, const std::string& path);

}  // namespace kgan

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "oasis/study.hpp"

namespace oasis::detail {

/// Instrument columns plus their period labels (empty when the file has no
/// label column). Missing cells are NaN.
std::pair<std::vector<std::string>, Matrix> read_instruments(const InstrumentSpec& spec);

}  // namespace oasis::detail

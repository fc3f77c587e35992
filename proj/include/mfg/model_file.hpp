#pragma once

#include <string>

#include "mfg/model.hpp"

namespace mfg {

/// Parses the section-based textual model format (see docs/model-format.md
/// for the normative grammar).  Required sections: [dimensions], [rates],
/// [control], [cost], [terminal]; optional: [labels].  Unlisted rate and
/// cost entries default to 0.  Throws ParseError with a 1-based document
/// position on syntax and semantic errors.
ModelSpec parse_model_file(const std::string& text);

/// Reads and parses a model file from disk.
ModelSpec load_model_file(const std::string& path);

/// 64-bit FNV-1a of the document bytes, as fixed-width hex.  Echoed into
/// experiment configs so results are traceable to the exact model text.
std::string model_digest(const std::string& text);

}  // namespace mfg

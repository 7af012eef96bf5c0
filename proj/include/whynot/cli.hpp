#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "whynot/engine.hpp"

namespace whynot {

// Deterministic JSON trace of a finished consultation. Carries everything
// the explanation questions read (matches, contexts, atoms, matrix,
// phrases), so a saved trace replays without the knowledge base or facts.
std::string consultation_to_trace(const Consultation& c);

// Throws std::invalid_argument on malformed or inconsistent trace text.
Consultation consultation_from_trace(const std::string& text);

// Command-line front end, stream-injected for in-process testing.
// Exit code 0: answered; 1: input or query problem; 2: usage.
int run_cli(std::vector<std::string> args, std::ostream& out,
            std::ostream& err);

}  // namespace whynot

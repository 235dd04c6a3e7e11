#pragma once

#include <stdexcept>
#include <string>

namespace evospring {

// Genome decoded to an empty largest connected component.
struct EmptyMorphology : std::runtime_error {
    explicit EmptyMorphology(const std::string& what) : std::runtime_error(what) {}
};

// Rank correlation is undefined when one of the rank vectors is constant.
struct ZeroVariance : std::runtime_error {
    explicit ZeroVariance(const std::string& what) : std::runtime_error(what) {}
};

// Genome/params dimensions disagree with each other or with the lattice.
struct ShapeMismatch : std::runtime_error {
    explicit ShapeMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace evospring

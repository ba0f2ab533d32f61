#pragma once

#include <stdexcept>
#include <string>

namespace vln {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Malformed graph input, unknown node ids, unreachable pairs where a distance is required.
class GraphError : public Error {
   public:
    using Error::Error;
};

/// Illegal transition: action not allowed, episode already finished.
class SimulationError : public Error {
   public:
    using Error::Error;
};

/// Expert demonstration cannot be generated for a ground-truth path.
class ExpertError : public Error {
   public:
    using Error::Error;
};

/// Dataset files that do not match their schema.
class DataError : public Error {
   public:
    using Error::Error;
};

/// A policy failed (threw or chose an illegal action) during an episode.
class PolicyError : public Error {
   public:
    PolicyError(std::string episode_id, int step, const std::string& what)
        : Error(what), episode_id_(std::move(episode_id)), step_(step) {}

    const std::string& episode_id() const { return episode_id_; }
    int step() const { return step_; }

   private:
    std::string episode_id_;
    int step_;
};

/// Model output text that does not map onto an action.
class ParseError : public Error {
   public:
    enum class Kind { unknown_token, invalid_candidate };

    ParseError(Kind kind, std::string raw, const std::string& what)
        : Error(what), kind_(kind), raw_(std::move(raw)) {}

    Kind kind() const { return kind_; }
    const std::string& raw() const { return raw_; }

   private:
    Kind kind_;
    std::string raw_;
};

}  // namespace vln

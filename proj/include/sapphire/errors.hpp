#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sapphire {

// Input outside a documented operand range.
struct ContractViolation : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Parameter set that cannot be realised (no root of unity, bad Barrett pair, ...).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Well-formed instruction used illegally (slot out of range, same-bank transform, ...).
struct ProgramError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Two accesses to one single-port SRAM in one cycle.
struct HazardFault : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AsmError : std::runtime_error {
    AsmError(std::size_t line, std::size_t col, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
          line(line), col(col) {}
    std::size_t line;
    std::size_t col;
};

struct DecodeError : std::runtime_error {
    DecodeError(std::size_t word, const std::string& msg)
        : std::runtime_error("word " + std::to_string(word) + ": " + msg), word(word) {}
    std::size_t word;
};

// Raised by the machine while executing; carries the faulting pc.
struct MachineFault : std::runtime_error {
    MachineFault(std::size_t pc, const std::string& msg)
        : std::runtime_error("pc " + std::to_string(pc) + ": " + msg), pc(pc) {}
    std::size_t pc;
};

}  // namespace sapphire

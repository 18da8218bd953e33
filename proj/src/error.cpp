#include "tpn2f/error.hpp"

namespace tpn2f {

const char* to_string(ExecErrorCode code) {
  switch (code) {
    case ExecErrorCode::UnknownOperator: return "unknown operator";
    case ExecErrorCode::DanglingReference: return "dangling reference";
    case ExecErrorCode::DivisionByZero: return "division by zero";
    case ExecErrorCode::DomainError: return "domain error";
    case ExecErrorCode::ArityError: return "arity error";
    case ExecErrorCode::UnknownSymbol: return "unknown symbol";
    case ExecErrorCode::TypeError: return "type error";
    case ExecErrorCode::SelfOutsideLambda: return "self outside lambda";
    case ExecErrorCode::RecursionLimit: return "recursion limit";
  }
  return "unknown error";
}

}  // namespace tpn2f

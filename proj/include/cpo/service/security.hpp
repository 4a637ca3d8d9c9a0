#ifndef CPO_SERVICE_SECURITY_HPP
#define CPO_SERVICE_SECURITY_HPP

#include <cstddef>
#include <string>
#include <string_view>

namespace cpo::service {

// Hex encoding of `n` bytes from the OS CSPRNG.
std::string random_hex(std::size_t n);

std::string sha256_hex(std::string_view data);

// Compares in time independent of where the inputs differ (lengths may leak).
bool constant_time_equal(std::string_view a, std::string_view b);

// "pbkdf2-sha256$<iterations>$<salt hex>$<digest hex>" with a fresh 16-byte salt.
std::string hash_password(std::string_view password, int iterations);
bool verify_password(std::string_view password, std::string_view encoded);

}  // namespace cpo::service

#endif  // CPO_SERVICE_SECURITY_HPP

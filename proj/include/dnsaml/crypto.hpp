#pragma once

// Thin wrappers over libsodium (Ed25519, XChaCha20-Poly1305, BLAKE2b) and
// OpenSSL (MD5, SHA-1) used by the dialects and countermeasures.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dnsaml::crypto
{

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::size_t kPublicKeySize = 32;
inline constexpr std::size_t kSecretKeySize = 64;
inline constexpr std::size_t kSeedSize = 32;
inline constexpr std::size_t kSignatureSize = 64;
inline constexpr std::size_t kAeadKeySize = 32;
inline constexpr std::size_t kAeadNonceSize = 24;
inline constexpr std::size_t kAeadTagSize = 16;

using PublicKey = std::array<std::uint8_t, kPublicKeySize>;
using SecretKey = std::array<std::uint8_t, kSecretKeySize>;
using Seed = std::array<std::uint8_t, kSeedSize>;
using Signature = std::array<std::uint8_t, kSignatureSize>;
using AeadKey = std::array<std::uint8_t, kAeadKeySize>;
using AeadNonce = std::array<std::uint8_t, kAeadNonceSize>;

/// Calls sodium_init once; throws if the library cannot initialise.
void ensure_initialized();

std::string md5_hex(std::span<const std::uint8_t> data);
std::string sha1_hex(std::span<const std::uint8_t> data);

struct SigningKeyPair
{
  PublicKey public_key{};
  SecretKey secret_key{};

  /// Deterministic key pair from a 32-byte seed.
  static SigningKeyPair from_seed(const Seed &seed);
  /// Key pair from a 64-bit scenario seed and a purpose tag.
  static SigningKeyPair derive(std::uint64_t seed, std::string_view purpose);
};

Signature sign_detached(const SecretKey &key, std::span<const std::uint8_t> message);
bool verify_detached(const PublicKey &key, const Signature &sig,
                     std::span<const std::uint8_t> message);

/// 32-byte key derived from arbitrary input material with a context tag (BLAKE2b).
AeadKey derive_key(std::span<const std::uint8_t> material, std::string_view context);

Bytes aead_seal(const AeadKey &key, const AeadNonce &nonce, std::span<const std::uint8_t> plain,
                std::span<const std::uint8_t> associated = {});
/// Returns nullopt when authentication fails.
std::optional<Bytes> aead_open(const AeadKey &key, const AeadNonce &nonce,
                               std::span<const std::uint8_t> cipher,
                               std::span<const std::uint8_t> associated = {});

std::string base64_encode(std::span<const std::uint8_t> data);
std::optional<Bytes> base64_decode(std::string_view text);

} // namespace dnsaml::crypto

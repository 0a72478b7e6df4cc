// One-shot video element: no controls, no seeking, no replay. The playback
// token was already consumed by the first byte fetch, so even a devtools
// replay attempt dies at the server.

import { PlaybackDenied } from "./flow.js";

export function playOnceInto(
  container: HTMLElement,
  url: string,
  widthPx: number,
): Promise<void> {
  return new Promise((resolve, reject) => {
    const video = document.createElement("video");
    video.width = widthPx;
    video.controls = false;
    video.autoplay = true;
    video.muted = true;
    video.preload = "auto";
    video.style.pointerEvents = "none"; // no pause-by-click, no scrubbing
    video.disablePictureInPicture = true;

    let maxPlayed = 0;
    video.addEventListener("timeupdate", () => {
      maxPlayed = Math.max(maxPlayed, video.currentTime);
    });
    video.addEventListener("seeking", () => {
      // suppress seek attempts: snap back to the furthest played position
      if (Math.abs(video.currentTime - maxPlayed) > 0.01) {
        video.currentTime = maxPlayed;
      }
    });
    video.addEventListener("pause", () => {
      if (!video.ended) {
        void video.play();
      }
    });
    video.addEventListener("ended", () => {
      video.remove();
      resolve();
    });
    video.addEventListener("error", () => {
      video.remove();
      reject(new PlaybackDenied("video stream was refused or failed"));
    });
    video.src = url;
    container.replaceChildren(video);
  });
}
